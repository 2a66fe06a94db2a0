//! Symbolic calculus on jet spaces: total derivatives, ordinary and
//! μ-prolongation of vector fields, the Euler-Lagrange operator and
//! variational exactness, plus a bundled audit of worked examples.

pub mod audit;
pub mod error;
pub mod expr;
pub mod gen;
pub mod jet;
pub mod par;
pub mod problem;
pub mod symmetry;
pub mod variational;

pub use error::{Error, Result};
pub use expr::{Check, Expr, JetContext, MultiIndex, Sampler, Symbol, Verdict};
