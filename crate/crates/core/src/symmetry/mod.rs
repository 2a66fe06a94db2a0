//! Vector fields on the base manifold, their ordinary and μ-prolongations,
//! and on-shell symmetry and invariance tests.

mod prolong;
mod shell;

pub use prolong::{
    apply, mu_prolong, mu_prolong_recursive, ordinary_prolong, Flavor, ProlongedVectorField, RecursionForm,
};
pub use shell::{restrict_on_shell, Equation};

use crate::error::{Error, Result};
use crate::expr::{is_zero, Check, Expr, JetContext, Sampler};
use crate::jet::total_derivative;

/// `X = ξ^i ∂_{x_i} + φ^α ∂_{u^α}` with coefficients on the base manifold.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub xi: Vec<Expr>,
    pub phi: Vec<Expr>,
}

impl VectorField {
    pub fn new(ctx: &JetContext, xi: Vec<Expr>, phi: Vec<Expr>) -> Result<Self> {
        if xi.len() != ctx.p() {
            return Err(Error::VectorField(format!("expected {} xi components, got {}", ctx.p(), xi.len())));
        }
        if phi.len() != ctx.q() {
            return Err(Error::VectorField(format!("expected {} phi components, got {}", ctx.q(), phi.len())));
        }
        for c in xi.iter().chain(&phi) {
            if c.jet_order() > 0 {
                return Err(Error::VectorField(format!(
                    "coefficient `{}` depends on derivatives",
                    ctx.display(c)
                )));
            }
        }
        Ok(VectorField {
            xi: xi.iter().map(Expr::normalize).collect(),
            phi: phi.iter().map(Expr::normalize).collect(),
        })
    }

    /// Componentwise sum, for linearity checks.
    pub fn add(&self, other: &VectorField) -> VectorField {
        let zip = |a: &[Expr], b: &[Expr]| a.iter().zip(b).map(|(x, y)| (x + y).normalize()).collect();
        VectorField {
            xi: zip(&self.xi, &other.xi),
            phi: zip(&self.phi, &other.phi),
        }
    }
}

/// `μ = λ_i dx_i`, a horizontal one-form on the first jet space.
#[derive(Debug, Clone, PartialEq)]
pub struct HorizontalOneForm {
    pub lambda: Vec<Expr>,
}

impl HorizontalOneForm {
    pub fn new(ctx: &JetContext, lambda: Vec<Expr>) -> Result<Self> {
        if lambda.len() != ctx.p() {
            return Err(Error::OneForm(format!("expected {} components, got {}", ctx.p(), lambda.len())));
        }
        for c in &lambda {
            if c.jet_order() > 1 {
                return Err(Error::OneForm(format!(
                    "coefficient `{}` has jet order above one",
                    ctx.display(c)
                )));
            }
        }
        Ok(HorizontalOneForm {
            lambda: lambda.iter().map(Expr::normalize).collect(),
        })
    }

    pub fn zero(ctx: &JetContext) -> Self {
        HorizontalOneForm {
            lambda: vec![Expr::zero(); ctx.p()],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.lambda.iter().all(Expr::is_zero_symbolic)
    }
}

/// Result of the compatibility test `D_i λ_j − D_j λ_i = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Compatibility {
    pub residuals: Vec<((usize, usize), Expr)>,
}

impl Compatibility {
    pub fn is_compatible(&self) -> bool {
        self.residuals.iter().all(|(_, r)| r.is_zero_symbolic())
    }

    /// First nonzero residual, in (i, j) order.
    pub fn witness(&self) -> Option<&((usize, usize), Expr)> {
        self.residuals.iter().find(|(_, r)| !r.is_zero_symbolic())
    }
}

/// Checks `D_i λ_j − D_j λ_i = 0` for every pair of directions. The residual
/// stored for the pair `(i, j)`, `i < j`, is `D_j λ_i − D_i λ_j`.
pub fn check_compatibility(ctx: &JetContext, mu: &HorizontalOneForm) -> Result<Compatibility> {
    let mut residuals = Vec::new();
    for i in 0..ctx.p() {
        for j in i + 1..ctx.p() {
            let a = total_derivative(ctx, &mu.lambda[i], j)?;
            let b = total_derivative(ctx, &mu.lambda[j], i)?;
            residuals.push(((i, j), (a - b).normalize()));
        }
    }
    Ok(Compatibility { residuals })
}

/// On-shell symmetry test: the prolongation of `field` (ordinary, or μ when
/// `mu` is given) applied to `eq.lhs`, restricted to the solution manifold.
pub fn check_symmetry(
    ctx: &JetContext,
    field: &VectorField,
    mu: Option<&HorizontalOneForm>,
    eq: &Equation,
    order: u32,
    sampler: &Sampler,
) -> Result<Check> {
    let needed = eq.lhs.jet_order();
    if order < needed {
        return Err(Error::OrderMismatch { found: needed, order });
    }
    let prolonged = match mu {
        Some(mu) => mu_prolong(ctx, field, mu, order)?,
        None => ordinary_prolong(ctx, field, order)?,
    };
    let action = apply(ctx, &prolonged, &eq.lhs)?;
    let residual = restrict_on_shell(ctx, &action, eq)?;
    Ok(Check {
        verdict: is_zero(ctx, &residual, sampler),
        residual,
        raw: action,
    })
}

/// Invariance test `Y(f) = 0`.
pub fn check_invariant(ctx: &JetContext, prolonged: &ProlongedVectorField, f: &Expr, sampler: &Sampler) -> Result<Check> {
    let residual = apply(ctx, prolonged, f)?;
    Ok(Check {
        verdict: is_zero(ctx, &residual, sampler),
        raw: residual.clone(),
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compatibility_examples() {
        let ctx = JetContext::new(&["x", "t"], &["u"], 3)
            .unwrap()
            .with_params(&["lambda", "tau"])
            .unwrap();
        let form = |a: &str, b: &str| HorizontalOneForm::new(&ctx, vec![ctx.expr(a).unwrap(), ctx.expr(b).unwrap()]).unwrap();

        assert!(check_compatibility(&ctx, &form("lambda", "tau")).unwrap().is_compatible());
        assert!(check_compatibility(&ctx, &form("u_x", "u_t")).unwrap().is_compatible());

        let bad = check_compatibility(&ctx, &form("u_t", "u_x")).unwrap();
        assert!(!bad.is_compatible());
        let (_, w) = bad.witness().unwrap();
        assert_eq!(*w, ctx.expr("u_tt - u_xx").unwrap());
    }

    #[test]
    fn field_and_form_validation() {
        let ctx = JetContext::new(&["x"], &["u"], 2).unwrap();
        assert!(VectorField::new(&ctx, vec![ctx.expr("u_x").unwrap()], vec![Expr::one()]).is_err());
        assert!(VectorField::new(&ctx, vec![], vec![Expr::one()]).is_err());
        assert!(HorizontalOneForm::new(&ctx, vec![ctx.expr("u_xx").unwrap()]).is_err());
        assert!(HorizontalOneForm::new(&ctx, vec![ctx.expr("u_x*u").unwrap()]).is_ok());
    }
}
