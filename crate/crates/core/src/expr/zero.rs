//! Zero testing: exact on the normal form, with a seeded numeric fallback.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::canon::Poly;
use super::context::{JetContext, Symbol};
use super::eval::{eval_at, ExpPolyFunction, Valuation};
use super::tree::Expr;
use crate::error::Error;
use crate::par::{self, Execution};

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_POINTS: usize = 50;
pub const DEFAULT_TOLERANCE: f64 = 1e-9;
pub const SAMPLE_LOW: f64 = 0.2;
pub const SAMPLE_HIGH: f64 = 1.7;
const RETRIES_PER_POINT: usize = 24;

/// Random valuation generator used for numeric zero tests.
#[derive(Debug, Clone, Serialize)]
pub struct Sampler {
    pub seed: u64,
    pub points: usize,
    pub tolerance: f64,
    pub low: f64,
    pub high: f64,
    #[serde(skip)]
    pub exec: Execution,
}

impl Default for Sampler {
    fn default() -> Self {
        Sampler {
            seed: DEFAULT_SEED,
            points: DEFAULT_POINTS,
            tolerance: DEFAULT_TOLERANCE,
            low: SAMPLE_LOW,
            high: SAMPLE_HIGH,
            exec: Execution::default(),
        }
    }
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Outcome of a zero test.
#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    /// The normal form is the zero polynomial.
    ZeroSymbolic,
    /// Every sampled value was below the tolerance.
    ProbablyZero { max_abs: f64, points: usize, tolerance: f64 },
    /// A concrete point where the expression is visibly nonzero.
    NonZero { witness: Vec<(Symbol, f64)>, value: f64 },
    /// Sampling could not find enough points inside the domain.
    Undetermined { reason: String },
}

impl Verdict {
    pub fn is_zero(&self) -> bool {
        matches!(self, Verdict::ZeroSymbolic | Verdict::ProbablyZero { .. })
    }

    pub fn is_symbolic_zero(&self) -> bool {
        matches!(self, Verdict::ZeroSymbolic)
    }

    pub fn is_nonzero(&self) -> bool {
        matches!(self, Verdict::NonZero { .. })
    }
}

/// A residual together with its zero-test verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    /// Normalized residual.
    pub residual: Expr,
    /// The residual as originally assembled, before normalization; used for
    /// numeric cross-checks.
    pub raw: Expr,
    pub verdict: Verdict,
}

impl Check {
    pub fn new(ctx: &JetContext, raw: Expr, sampler: &Sampler) -> Check {
        let normal = Poly::from_expr(&raw);
        let residual = normal.to_expr();
        let verdict = poly_is_zero(ctx, &normal, &residual, sampler);
        Check { residual, raw, verdict }
    }

    pub fn difference(ctx: &JetContext, lhs: &Expr, rhs: &Expr, sampler: &Sampler) -> Check {
        Check::new(ctx, lhs - rhs, sampler)
    }

    pub fn passed(&self) -> bool {
        self.verdict.is_zero()
    }
}

impl Sampler {
    pub fn with_seed(seed: u64) -> Self {
        Sampler {
            seed,
            ..Sampler::default()
        }
    }

    fn rng_for(&self, point: usize, attempt: usize) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(mix(self.seed ^ mix(point as u64 ^ mix(attempt as u64 + 1))))
    }

    /// Test implementations for every opaque function of the context; fixed
    /// by the seed, shared across all points.
    fn test_functions(&self, ctx: &JetContext) -> Vec<Arc<ExpPolyFunction>> {
        ctx.opaque_functions()
            .iter()
            .enumerate()
            .map(|(k, (_, arity))| {
                let mut rng = ChaCha8Rng::seed_from_u64(mix(self.seed.wrapping_add(0xF00D + k as u64)));
                let rates = (0..*arity).map(|_| rng.gen_range(-0.9..0.9)).collect();
                let terms = (0..4)
                    .map(|_| {
                        let powers = (0..*arity).map(|_| rng.gen_range(0..=3)).collect();
                        (rng.gen_range(-1.5..1.5), powers)
                    })
                    .collect();
                Arc::new(ExpPolyFunction { rates, terms })
            })
            .collect()
    }

    /// The valuation used for sample `point`, retry `attempt`.
    pub fn valuation(&self, ctx: &JetContext, symbols: &[Symbol], point: usize, attempt: usize) -> Valuation {
        let mut rng = self.rng_for(point, attempt);
        let mut v = Valuation::new();
        for s in symbols {
            v.set(s.clone(), rng.gen_range(self.low..self.high));
        }
        for (k, f) in self.test_functions(ctx).into_iter().enumerate() {
            v.bind_function(k, f);
        }
        v
    }

    /// Values of `e` at each of the sample points (first in-domain attempt per
    /// point), or `None` for points that never landed in the domain.
    pub fn sample(&self, ctx: &JetContext, e: &Expr) -> Vec<Option<(Valuation, f64)>> {
        let symbols = e.symbols();
        let functions = self.test_functions(ctx);
        par::map_range(self.exec, self.points, |point| {
            for attempt in 0..RETRIES_PER_POINT {
                let mut rng = self.rng_for(point, attempt);
                let mut v = Valuation::new();
                for s in &symbols {
                    v.set(s.clone(), rng.gen_range(self.low..self.high));
                }
                for (k, f) in functions.iter().enumerate() {
                    v.bind_function(k, f.clone());
                }
                match eval_at(ctx, e, &v) {
                    Ok(value) => return Some((v, value)),
                    Err(Error::Domain { .. }) => continue,
                    Err(_) => return None,
                }
            }
            None
        })
    }

    /// Largest absolute value over the sample points that evaluated.
    pub fn max_abs(&self, ctx: &JetContext, e: &Expr) -> Option<f64> {
        self.sample(ctx, e)
            .into_iter()
            .flatten()
            .map(|(_, v)| v.abs())
            .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))))
    }
}

/// Zero test: exact when the normal form vanishes, otherwise sampled.
pub fn is_zero(ctx: &JetContext, e: &Expr, sampler: &Sampler) -> Verdict {
    let normal = Poly::from_expr(e);
    poly_is_zero(ctx, &normal, &normal.to_expr(), sampler)
}

fn poly_is_zero(ctx: &JetContext, normal: &Poly, tree: &Expr, sampler: &Sampler) -> Verdict {
    if normal.is_zero() {
        return Verdict::ZeroSymbolic;
    }
    let samples = sampler.sample(ctx, tree);
    let mut max_abs: f64 = 0.0;
    let mut missing = 0;
    for s in &samples {
        match s {
            Some((v, value)) => {
                if value.abs() >= sampler.tolerance {
                    return Verdict::NonZero {
                        witness: v.values().map(|(s, x)| (s.clone(), *x)).collect(),
                        value: *value,
                    };
                }
                max_abs = max_abs.max(value.abs());
            }
            None => missing += 1,
        }
    }
    if missing > 0 {
        return Verdict::Undetermined {
            reason: format!(
                "{missing} of {} sample points stayed outside the domain after {RETRIES_PER_POINT} retries",
                sampler.points
            ),
        };
    }
    Verdict::ProbablyZero {
        max_abs,
        points: sampler.points,
        tolerance: sampler.tolerance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    #[test]
    fn verdicts() {
        let ctx = JetContext::new(&["x", "t"], &["u"], 2).unwrap();
        let s = Sampler::default();
        let e = parse("(x+1)^2 - x^2 - 2*x - 1", &ctx).unwrap();
        assert_eq!(is_zero(&ctx, &e, &s), Verdict::ZeroSymbolic);
        let e = parse("u_xx - u_tt", &ctx).unwrap();
        match is_zero(&ctx, &e, &s) {
            Verdict::NonZero { witness, value } => {
                let v = witness.iter().fold(Valuation::new(), |v, (k, x)| v.with(k.clone(), *x));
                assert_eq!(eval_at(&ctx, &e, &v).unwrap(), value);
                assert!(value.abs() >= 1e-9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rational_identity_is_probably_zero() {
        let ctx = JetContext::new(&["x"], &["u"], 1).unwrap();
        let e = parse("(1+x)*(1+x)^(-1) - 1", &ctx).unwrap();
        assert!(matches!(is_zero(&ctx, &e, &Sampler::default()), Verdict::ProbablyZero { .. }));
    }

    #[test]
    fn domain_failures_are_reported() {
        let ctx = JetContext::new(&["x"], &["u"], 1).unwrap();
        let e = parse("ln(-x^2*u)", &ctx).unwrap();
        assert!(matches!(is_zero(&ctx, &e, &Sampler::default()), Verdict::Undetermined { .. }));
    }

    #[test]
    fn sampling_is_schedule_independent() {
        let ctx = JetContext::new(&["x"], &["u"], 2).unwrap().with_opaque("F", 2).unwrap();
        let e = parse("F(u, x)*u_xx + exp(u_x)", &ctx).unwrap();
        let seq = Sampler {
            exec: Execution::Sequential,
            ..Sampler::default()
        };
        let a: Vec<f64> = seq.sample(&ctx, &e).into_iter().map(|s| s.unwrap().1).collect();
        let b: Vec<f64> = Sampler::default().sample(&ctx, &e).into_iter().map(|s| s.unwrap().1).collect();
        assert_eq!(a, b);
        assert!(a.iter().all(|v| v.is_finite()));
    }
}
