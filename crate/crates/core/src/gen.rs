//! Seeded random generators for expressions, vector fields, one-forms and
//! densities, used by the property tests and benchmarks.

use num_rational::Rational64;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::expr::{Expr, JetContext, Opaque, Symbol};
use crate::symmetry::{HorizontalOneForm, VectorField};

fn small_rational<R: Rng>(rng: &mut R) -> Expr {
    let num = rng.gen_range(-5i64..=5);
    let den = [1i64, 1, 1, 2, 3][rng.gen_range(0..5)];
    Expr::rational(num, den)
}

fn nonzero_rational<R: Rng>(rng: &mut R) -> Expr {
    loop {
        let c = small_rational(rng);
        if !c.is_zero_symbolic() {
            return c;
        }
    }
}

/// Random expression tree over `symbols` with nesting depth at most
/// `depth`: sums, products, small powers (including `-1` and `1/2`), `exp`,
/// `ln`, and applications of the context's opaque functions.
pub fn expression<R: Rng>(rng: &mut R, ctx: &JetContext, symbols: &[Symbol], depth: u32) -> Expr {
    if depth == 0 || rng.gen_bool(0.3) {
        return if rng.gen_bool(0.75) && !symbols.is_empty() {
            Expr::sym(symbols.choose(rng).unwrap().clone())
        } else {
            small_rational(rng)
        };
    }
    let sub = |rng: &mut R| expression(rng, ctx, symbols, depth - 1);
    let opaque = ctx.opaque_functions();
    match rng.gen_range(0..10) {
        0..=2 => Expr::sum(vec![sub(rng), sub(rng)]),
        3..=5 => Expr::product(vec![sub(rng), sub(rng)]),
        6 => {
            let r = [Rational64::from_integer(2), Rational64::from_integer(-1), Rational64::new(1, 2)][rng.gen_range(0..3)];
            sub(rng).pow(r)
        }
        7 => sub(rng).exp(),
        8 => sub(rng).ln(),
        _ if !opaque.is_empty() => {
            let f = rng.gen_range(0..opaque.len());
            let args = (0..opaque[f].1).map(|_| sub(rng)).collect();
            Expr::apply(Opaque::new(f), args)
        }
        _ => Expr::product(vec![nonzero_rational(rng), sub(rng)]),
    }
}

/// Random polynomial in `symbols` with rational coefficients.
pub fn polynomial<R: Rng>(rng: &mut R, symbols: &[Symbol], degree: u32, terms: usize) -> Expr {
    let mut out = Vec::with_capacity(terms);
    for _ in 0..terms {
        let mut factors = vec![small_rational(rng)];
        let d = rng.gen_range(0..=degree);
        for _ in 0..d {
            if let Some(s) = symbols.choose(rng) {
                factors.push(Expr::sym(s.clone()));
            }
        }
        out.push(Expr::product(factors));
    }
    Expr::sum(out).normalize()
}

/// Vector field with polynomial coefficients of degree at most `degree` in
/// the base coordinates.
pub fn vector_field<R: Rng>(rng: &mut R, ctx: &JetContext, degree: u32) -> VectorField {
    let base = ctx.symbols_up_to(0);
    let xi = (0..ctx.p()).map(|_| polynomial(rng, &base, degree, 3)).collect();
    let phi = (0..ctx.q()).map(|_| polynomial(rng, &base, degree, 3)).collect();
    VectorField::new(ctx, xi, phi).expect("base-manifold coefficients")
}

/// One-form with polynomial coefficients of degree at most `degree` on the
/// first jet space.
pub fn one_form<R: Rng>(rng: &mut R, ctx: &JetContext, degree: u32) -> HorizontalOneForm {
    let first = ctx.symbols_up_to(1);
    let lambda = (0..ctx.p()).map(|_| polynomial(rng, &first, degree, 3)).collect();
    HorizontalOneForm::new(ctx, lambda).expect("first-order coefficients")
}

fn jet_symbols(ctx: &JetContext, order: u32) -> Vec<Symbol> {
    ctx.symbols_up_to(order)
}

/// Polynomial terms plus `exp(k·w)` factors for single coordinates `w`, jet
/// order at most `order`. This class stays inside what the elimination-based
/// antiderivative can integrate.
pub fn density<R: Rng>(rng: &mut R, ctx: &JetContext, order: u32) -> Expr {
    let symbols = jet_symbols(ctx, order);
    let mut terms = vec![polynomial(rng, &symbols, 3, 3)];
    for _ in 0..rng.gen_range(1..=2) {
        let w = symbols.choose(rng).unwrap().clone();
        let k = [1i64, -1, 2][rng.gen_range(0..3)];
        let factor = polynomial(rng, &symbols, 1, 2);
        terms.push(Expr::product(vec![factor, Expr::product(vec![Expr::int(k), Expr::sym(w)]).exp()]));
    }
    Expr::sum(terms).normalize()
}

/// `p` components for a divergence `Div ξ`, each a random [`density`].
pub fn divergence_field<R: Rng>(rng: &mut R, ctx: &JetContext, order: u32) -> Vec<Expr> {
    (0..ctx.p()).map(|_| density(rng, ctx, order)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generators_are_seeded() {
        let ctx = JetContext::new(&["x", "t"], &["u"], 3).unwrap();
        let syms = ctx.symbols_up_to(1);
        let a = expression(&mut ChaCha8Rng::seed_from_u64(7), &ctx, &syms, 4);
        let b = expression(&mut ChaCha8Rng::seed_from_u64(7), &ctx, &syms, 4);
        assert_eq!(a, b);
        let f = vector_field(&mut ChaCha8Rng::seed_from_u64(1), &ctx, 2);
        assert!(f.xi.iter().chain(&f.phi).all(|c| c.jet_order() == 0));
        let d = density(&mut ChaCha8Rng::seed_from_u64(3), &ctx, 2);
        assert!(d.jet_order() <= 2);
    }
}
