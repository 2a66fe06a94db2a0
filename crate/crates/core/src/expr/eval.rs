use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use num_traits::ToPrimitive;

use super::context::{JetContext, Opaque, Symbol};
use super::tree::Expr;
use crate::error::{Error, Result};

/// A smooth test implementation of an opaque function, able to evaluate any
/// formal partial `F_{;i1..ik}` at a point.
pub trait TestFunction: Send + Sync {
    fn eval(&self, partials: &[usize], args: &[f64]) -> f64;
}

impl<F> TestFunction for F
where
    F: Fn(&[usize], &[f64]) -> f64 + Send + Sync,
{
    fn eval(&self, partials: &[usize], args: &[f64]) -> f64 {
        self(partials, args)
    }
}

/// `exp(c·a)` plus a sparse polynomial of degree at most three. The
/// polynomial part keeps mixed partials from collapsing onto multiples of the
/// function itself, which a pure exponential would allow.
#[derive(Debug, Clone)]
pub struct ExpPolyFunction {
    pub rates: Vec<f64>,
    pub terms: Vec<(f64, Vec<u32>)>,
}

impl TestFunction for ExpPolyFunction {
    fn eval(&self, partials: &[usize], args: &[f64]) -> f64 {
        let mut exp_factor = 1.0;
        for &slot in partials {
            exp_factor *= self.rates[slot];
        }
        let exponent: f64 = self.rates.iter().zip(args).map(|(c, a)| c * a).sum();
        let mut total = exp_factor * exponent.exp();
        'terms: for (coef, powers) in &self.terms {
            let mut powers = powers.clone();
            let mut c = *coef;
            for &slot in partials {
                if powers[slot] == 0 {
                    continue 'terms;
                }
                c *= f64::from(powers[slot]);
                powers[slot] -= 1;
            }
            let mono: f64 = powers.iter().zip(args).map(|(&k, a)| a.powi(k as i32)).product();
            total += c * mono;
        }
        total
    }
}

/// Numeric values for symbols, plus test implementations of opaque functions.
#[derive(Clone, Default)]
pub struct Valuation {
    values: BTreeMap<Symbol, f64>,
    functions: BTreeMap<usize, Arc<dyn TestFunction>>,
}

impl fmt::Debug for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Valuation")
            .field("values", &self.values)
            .field("functions", &self.functions.keys().collect::<Vec<_>>())
            .finish()
    }
}

impl Valuation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, s: Symbol, v: f64) -> &mut Self {
        self.values.insert(s, v);
        self
    }

    pub fn with(mut self, s: Symbol, v: f64) -> Self {
        self.values.insert(s, v);
        self
    }

    pub fn bind_function(&mut self, func: usize, f: Arc<dyn TestFunction>) -> &mut Self {
        self.functions.insert(func, f);
        self
    }

    pub fn get(&self, s: &Symbol) -> Option<f64> {
        self.values.get(s).copied()
    }

    pub fn values(&self) -> impl Iterator<Item = (&Symbol, &f64)> {
        self.values.iter()
    }

    pub fn describe(&self, ctx: &JetContext) -> String {
        let parts: Vec<String> = self
            .values
            .iter()
            .map(|(s, v)| format!("{}={v}", ctx.symbol_name(s)))
            .collect();
        parts.join(", ")
    }
}

/// Double-precision evaluation of `e` under `v`.
pub fn eval_at(ctx: &JetContext, e: &Expr, v: &Valuation) -> Result<f64> {
    Evaluator {
        ctx,
        v,
        memo: HashMap::new(),
    }
    .eval(e)
}

/// Tree walk with values of shared `Arc` children memoized by address, so a
/// subtree referenced from many places is evaluated once per valuation.
struct Evaluator<'a> {
    ctx: &'a JetContext,
    v: &'a Valuation,
    memo: HashMap<*const Expr, f64>,
}

impl Evaluator<'_> {
    fn shared(&mut self, child: &Arc<Expr>) -> Result<f64> {
        let key = Arc::as_ptr(child);
        if let Some(x) = self.memo.get(&key) {
            return Ok(*x);
        }
        let x = self.eval(child)?;
        self.memo.insert(key, x);
        Ok(x)
    }

    fn domain(&self, sub: &Expr, reason: &str) -> Error {
        Error::Domain {
            expr: self.ctx.display(sub),
            reason: reason.to_string(),
        }
    }

    fn eval(&mut self, e: &Expr) -> Result<f64> {
        let value = match e {
            Expr::Num(c) => c.to_f64().unwrap_or(f64::NAN),
            Expr::Sym(s) => self
                .v
                .get(s)
                .ok_or_else(|| Error::MissingBinding(self.ctx.symbol_name(s)))?,
            Expr::Add(xs) => {
                let mut acc = 0.0;
                for x in xs.iter() {
                    acc += self.eval(x)?;
                }
                acc
            }
            Expr::Mul(xs) => {
                let mut acc = 1.0;
                for x in xs.iter() {
                    acc *= self.eval(x)?;
                }
                acc
            }
            Expr::Pow(b, r) => {
                let base = self.shared(b)?;
                if r.is_integer() {
                    let n = r.to_integer();
                    if n < 0 && base == 0.0 {
                        return Err(self.domain(e, "division by zero"));
                    }
                    base.powi(n as i32)
                } else {
                    if base < 0.0 {
                        if *r.denom() % 2 == 1 {
                            let mag = (-base).powf(*r.numer() as f64 / *r.denom() as f64);
                            return Ok(if r.numer() % 2 == 0 { mag } else { -mag });
                        }
                        return Err(self.domain(e, "non-integer power of a negative number"));
                    }
                    if base == 0.0 && *r.numer() < 0 {
                        return Err(self.domain(e, "division by zero"));
                    }
                    base.powf(*r.numer() as f64 / *r.denom() as f64)
                }
            }
            Expr::Exp(a) => self.shared(a)?.exp(),
            Expr::Ln(a) => {
                let x = self.shared(a)?;
                if x <= 0.0 {
                    return Err(self.domain(e, "logarithm of a non-positive number"));
                }
                x.ln()
            }
            Expr::Apply(Opaque { func, partials }, args) => {
                let f = self
                    .v
                    .functions
                    .get(func)
                    .ok_or_else(|| Error::MissingBinding(self.ctx.opaque_functions()[*func].0.clone()))?
                    .clone();
                let xs = args.iter().map(|a| self.eval(a)).collect::<Result<Vec<_>>>()?;
                f.eval(partials, &xs)
            }
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(self.domain(e, "non-finite value"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    #[test]
    fn simple_values() {
        let ctx = JetContext::new(&["x", "t"], &["u"], 1).unwrap();
        let x = ctx.var("x").unwrap();
        let t = ctx.var("t").unwrap();
        let v = Valuation::new().with(x.clone(), 3.0);
        assert_eq!(eval_at(&ctx, &parse("x^2", &ctx).unwrap(), &v).unwrap(), 9.0);

        let v = Valuation::new().with(x.clone(), 1.0).with(t, 2.0);
        let y = eval_at(&ctx, &parse("t*exp(1/x)", &ctx).unwrap(), &v).unwrap();
        assert!((y - 2.0 * std::f64::consts::E).abs() < 1e-12);
        assert!((y - 5.436_563_656_918_09).abs() < 1e-12);
    }

    #[test]
    fn domain_errors() {
        let ctx = JetContext::new(&["x"], &["u"], 1).unwrap();
        let x = ctx.var("x").unwrap();
        let v = Valuation::new().with(x.clone(), -1.0);
        let err = eval_at(&ctx, &parse("ln(x)", &ctx).unwrap(), &v).unwrap_err();
        assert!(matches!(err, Error::Domain { ref expr, .. } if expr == "ln(x)"));
        assert!(eval_at(&ctx, &parse("sqrt(x)", &ctx).unwrap(), &v).is_err());
        assert_eq!(eval_at(&ctx, &parse("x^(1/3)", &ctx).unwrap(), &v).unwrap(), -1.0);
        let zero = Valuation::new().with(x, 0.0);
        assert!(eval_at(&ctx, &parse("1/x", &ctx).unwrap(), &zero).is_err());
        assert!(matches!(
            eval_at(&ctx, &parse("u", &ctx).unwrap(), &zero),
            Err(Error::MissingBinding(ref n)) if n == "u"
        ));
    }

    #[test]
    fn exp_poly_partials_match_finite_differences() {
        let f = ExpPolyFunction {
            rates: vec![0.3, -0.7],
            terms: vec![(1.5, vec![2, 1]), (-0.5, vec![0, 3])],
        };
        let a = [0.4, 0.9];
        let h = 1e-6;
        let fd = (f.eval(&[], &[a[0] + h, a[1]]) - f.eval(&[], &[a[0] - h, a[1]])) / (2.0 * h);
        assert!((fd - f.eval(&[0], &a)).abs() < 1e-6);
        let fd = (f.eval(&[0], &[a[0], a[1] + h]) - f.eval(&[0], &[a[0], a[1] - h])) / (2.0 * h);
        assert!((fd - f.eval(&[0, 1], &a)).abs() < 1e-6);
    }
}
