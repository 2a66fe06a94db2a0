use std::collections::BTreeMap;

use num_rational::Rational64;

use crate::error::{Error, Result};
use crate::expr::canon::Poly;
use crate::expr::{partial_poly, Expr, Jet, JetContext, MultiIndex, Symbol};
use crate::jet::total_derivative_multi_poly;

/// `lhs = 0`, solved as `leading = rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Equation {
    pub lhs: Expr,
    pub leading: Jet,
    pub rhs: Expr,
    /// Coefficient of `leading` in `lhs`; the solved form assumes it is
    /// nonzero.
    pub coefficient: Expr,
}

fn extends(jet: &Jet, leading: &Jet) -> Option<MultiIndex> {
    if jet.dep != leading.dep {
        return None;
    }
    jet.index.checked_sub(&leading.index)
}

impl Equation {
    /// Solves `lhs = 0` for `leading`; `lhs` must be affine in it.
    pub fn solve_for(ctx: &JetContext, lhs: &Expr, leading: &Jet) -> Result<Equation> {
        let lead = Symbol::Jet(leading.clone());
        ctx.check_symbol(&lead)?;
        let name = ctx.jet_name(leading);
        let p = Poly::from_expr(lhs);
        let a = partial_poly(&p, &lead);
        if a.is_zero() {
            return Err(Error::Equation(format!("`{name}` does not occur in the equation")));
        }
        if a.symbols().contains(&lead) {
            return Err(Error::Equation(format!("equation is not affine in `{name}`")));
        }
        let b = Poly::from_expr(&lhs.map_symbols(&|s| (*s == lead).then(Expr::zero)));
        let lead_poly = Poly::symbol(lead.clone());
        if !p.sub(&a.mul(&lead_poly)).sub(&b).is_zero() {
            return Err(Error::Equation(format!("equation is not affine in `{name}`")));
        }
        let rhs = b.neg().mul(&a.pow_rational(Rational64::from_integer(-1)));
        for s in rhs.symbols() {
            if let Symbol::Jet(j) = &s {
                if extends(j, leading).is_some() {
                    return Err(Error::Equation(format!(
                        "solved form for `{name}` contains `{}`",
                        ctx.jet_name(j)
                    )));
                }
            }
        }
        Ok(Equation {
            lhs: lhs.normalize(),
            leading: leading.clone(),
            rhs: rhs.to_expr(),
            coefficient: a.to_expr(),
        })
    }

    /// Same as [`Equation::solve_for`] with the leading coordinate spelled as
    /// in the grammar, e.g. `u_xx`.
    pub fn solve_for_named(ctx: &JetContext, lhs: &Expr, leading: &str) -> Result<Equation> {
        match ctx.jet(leading)? {
            Symbol::Jet(j) => Equation::solve_for(ctx, lhs, &j),
            _ => unreachable!(),
        }
    }

    /// `leading − rhs = 0`.
    pub fn solved(ctx: &JetContext, leading: &Jet, rhs: &Expr) -> Result<Equation> {
        let lhs = Expr::jet(leading.clone()) - rhs.clone();
        Equation::solve_for(ctx, &lhs, leading)
    }
}

const MAX_PASSES: usize = 64;

/// Eliminates `leading` and all of its derivatives from `e` using the solved
/// form of `eq` and its total derivatives.
pub fn restrict_on_shell(ctx: &JetContext, e: &Expr, eq: &Equation) -> Result<Expr> {
    let rhs = Poly::from_expr(&eq.rhs);
    let mut cache: BTreeMap<MultiIndex, Expr> = BTreeMap::new();
    let mut current = e.normalize();
    for _ in 0..MAX_PASSES {
        let hits: Vec<(Jet, MultiIndex)> = current
            .symbols()
            .into_iter()
            .filter_map(|s| match s {
                Symbol::Jet(j) => extends(&j, &eq.leading).map(|k| (j, k)),
                _ => None,
            })
            .collect();
        if hits.is_empty() {
            return Ok(current);
        }
        let mut bindings: BTreeMap<Symbol, Expr> = BTreeMap::new();
        for (jet, k) in hits {
            let image = match cache.get(&k) {
                Some(v) => v.clone(),
                None => {
                    let v = total_derivative_multi_poly(ctx, &rhs, &k)?.to_expr();
                    cache.insert(k, v.clone());
                    v
                }
            };
            bindings.insert(Symbol::Jet(jet), image);
        }
        current = current.map_symbols(&|s| bindings.get(s).cloned()).normalize();
    }
    Err(Error::Equation(format!(
        "on-shell elimination of `{}` did not terminate",
        ctx.jet_name(&eq.leading)
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{is_zero, Sampler, Verdict};
    use crate::symmetry::{apply, ordinary_prolong, VectorField};

    fn ode() -> JetContext {
        JetContext::new(&["x"], &["u"], 4).unwrap()
    }

    fn linear(c: &JetContext) -> Equation {
        Equation::solve_for_named(c, &c.expr("u_xx - u").unwrap(), "u_xx").unwrap()
    }

    #[test]
    fn linear_examples() {
        let c = ode();
        let eq = linear(&c);
        assert_eq!(eq.rhs, c.expr("u").unwrap());
        assert_eq!(restrict_on_shell(&c, &c.expr("u_xx - u").unwrap(), &eq).unwrap(), Expr::zero());
        assert_eq!(restrict_on_shell(&c, &c.expr("u_xxx").unwrap(), &eq).unwrap(), c.expr("u_x").unwrap());
        assert_eq!(restrict_on_shell(&c, &c.expr("u_xxxx").unwrap(), &eq).unwrap(), c.expr("u").unwrap());
    }

    #[test]
    fn scaling_is_a_symmetry_of_the_linear_equation() {
        let c = ode();
        let eq = linear(&c);
        let x = VectorField::new(&c, vec![Expr::zero()], vec![c.expr("u").unwrap()]).unwrap();
        let y = ordinary_prolong(&c, &x, 2).unwrap();
        let r = apply(&c, &y, &eq.lhs).unwrap();
        assert_eq!(restrict_on_shell(&c, &r, &eq).unwrap(), Expr::zero());
    }

    #[test]
    fn division_by_leading_coefficient() {
        let c = ode();
        let eq = Equation::solve_for_named(&c, &c.expr("8*(u_x+1)*u_xx - u^3").unwrap(), "u_xx").unwrap();
        let back = (&(&eq.coefficient * &eq.rhs) - &c.expr("u^3").unwrap()).normalize();
        assert!(matches!(is_zero(&c, &back, &Sampler::default()), Verdict::ProbablyZero { .. } | Verdict::ZeroSymbolic));
        assert_eq!(eq.coefficient, c.expr("8*u_x + 8").unwrap());
    }

    #[test]
    fn rejects_non_affine_and_missing() {
        let c = ode();
        assert!(Equation::solve_for_named(&c, &c.expr("u_xx^2 - u").unwrap(), "u_xx").is_err());
        assert!(Equation::solve_for_named(&c, &c.expr("exp(u_xx) - u").unwrap(), "u_xx").is_err());
        assert!(Equation::solve_for_named(&c, &c.expr("u_x - u").unwrap(), "u_xx").is_err());
        // the solved form may not contain derivatives of the leading coordinate
        assert!(Equation::solve_for_named(&c, &c.expr("u_xx - u_xxx").unwrap(), "u_xx").is_err());
    }
}
