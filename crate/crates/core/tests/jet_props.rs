use jetcalc_core::expr::partial;
use jetcalc_core::gen;
use jetcalc_core::jet::{lie_characteristic, total_derivative};
use jetcalc_core::{Expr, JetContext, Symbol};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn ctx() -> JetContext {
    JetContext::new(&["x", "t"], &["u", "v"], 3).unwrap().with_opaque("F", 2).unwrap()
}

fn random(seed: u64, symbols: &[Symbol]) -> Expr {
    gen::expression(&mut ChaCha8Rng::seed_from_u64(seed), &ctx(), symbols, 3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn total_derivatives_commute(seed in any::<u64>()) {
        let ctx = ctx();
        let e = random(seed, &ctx.symbols_up_to(1));
        let dxt = total_derivative(&ctx, &total_derivative(&ctx, &e, 1).unwrap(), 0).unwrap();
        let dtx = total_derivative(&ctx, &total_derivative(&ctx, &e, 0).unwrap(), 1).unwrap();
        prop_assert!((&dxt - &dtx).is_zero_symbolic());
    }

    #[test]
    fn leibniz_rule(a in any::<u64>(), b in any::<u64>()) {
        let ctx = ctx();
        let syms = ctx.symbols_up_to(2);
        let (a, b) = (random(a, &syms), random(b, &syms));
        for i in 0..ctx.p() {
            let lhs = total_derivative(&ctx, &(&a * &b), i).unwrap();
            let rhs = &(&a * &total_derivative(&ctx, &b, i).unwrap()) + &(&b * &total_derivative(&ctx, &a, i).unwrap());
            prop_assert!((&lhs - &rhs).is_zero_symbolic());
        }
    }

    #[test]
    fn total_derivative_of_base_function_is_partial(seed in any::<u64>()) {
        let ctx = ctx();
        let base: Vec<Symbol> = ctx
            .symbols_up_to(0)
            .into_iter()
            .filter(|s| matches!(s, Symbol::Indep(_)))
            .collect();
        let e = random(seed, &base);
        for (i, name) in ctx.independent_names().iter().enumerate() {
            let d = total_derivative(&ctx, &e, i).unwrap();
            let p = partial(&ctx, &e, &ctx.var(name).unwrap()).unwrap();
            prop_assert!((&d - &p).is_zero_symbolic());
        }
    }

    #[test]
    fn characteristic_is_linear(a in any::<u64>(), b in any::<u64>()) {
        let ctx = JetContext::new(&["x", "t"], &["u"], 3).unwrap();
        let f = gen::vector_field(&mut ChaCha8Rng::seed_from_u64(a), &ctx, 2);
        let g = gen::vector_field(&mut ChaCha8Rng::seed_from_u64(b), &ctx, 2);
        let sum = lie_characteristic(&ctx, &f.add(&g));
        let parts = lie_characteristic(&ctx, &f)
            .into_iter()
            .zip(lie_characteristic(&ctx, &g))
            .map(|(p, q)| &p + &q);
        for (s, p) in sum.iter().zip(parts) {
            prop_assert!((s - &p).is_zero_symbolic());
        }
    }
}

#[test]
fn order_overflow_is_an_error() {
    let ctx = JetContext::new(&["x"], &["u"], 2).unwrap();
    let e = ctx.expr("u_xx").unwrap();
    assert!(total_derivative(&ctx, &e, 0).is_err());
}
