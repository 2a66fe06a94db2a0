//! Exact symbolic expressions over a jet-space variable roster.

mod calculus;
pub(crate) mod canon;
mod context;
mod eval;
mod parse;
mod print;
mod tree;
mod zero;

pub use calculus::{opaque_coefficients, partial, substitute};
pub(crate) use calculus::{derive, partial_poly};
pub use context::{Jet, JetContext, MultiIndex, Opaque, Symbol, RESERVED};
pub use eval::{eval_at, ExpPolyFunction, TestFunction, Valuation};
pub use parse::{parse, parse_with, NoResolve, Resolve};
pub use tree::Expr;
pub use zero::{
    is_zero, Check, Sampler, Verdict, DEFAULT_POINTS, DEFAULT_SEED, DEFAULT_TOLERANCE, SAMPLE_HIGH, SAMPLE_LOW,
};

impl JetContext {
    /// Renders `e` in the DSL grammar.
    pub fn display(&self, e: &Expr) -> String {
        print::render(self, e)
    }

    /// Parses and normalizes.
    pub fn expr(&self, text: &str) -> crate::error::Result<Expr> {
        parse(text, self).map(|e| e.normalize())
    }
}
