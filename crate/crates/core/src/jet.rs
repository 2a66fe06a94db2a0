//! Total derivatives on a truncated jet space.
//!
//! `D_i f = ∂f/∂x_i + Σ u^α_{J+e_i} ∂f/∂u^α_J`. The jet-order cap of the
//! context is enforced: an operator that would need a coordinate beyond it
//! fails with [`Error::OrderOverflow`] instead of truncating.

use crate::error::{Error, Result};
use crate::expr::canon::Poly;
use crate::expr::{derive, Expr, Jet, JetContext, MultiIndex, Symbol};
use crate::symmetry::VectorField;

/// An expression paired with the highest jet order occurring in it.
#[derive(Debug, Clone, PartialEq)]
pub struct JetOrderProfile {
    pub expr: Expr,
    pub order: u32,
}

impl JetOrderProfile {
    pub fn of(expr: &Expr) -> Self {
        JetOrderProfile {
            order: expr.jet_order(),
            expr: expr.clone(),
        }
    }
}

fn check_direction(ctx: &JetContext, i: usize) -> Result<()> {
    if i < ctx.p() {
        Ok(())
    } else {
        Err(Error::UndeclaredSymbol(format!("independent variable #{i}")))
    }
}

pub(crate) fn total_derivative_poly(ctx: &JetContext, p: &Poly, i: usize) -> Result<Poly> {
    check_direction(ctx, i)?;
    let max = ctx.max_order();
    derive(p, &|s: &Symbol| match s {
        Symbol::Indep(j) => Ok(if *j == i { Poly::one() } else { Poly::zero() }),
        Symbol::Param(_) => Ok(Poly::zero()),
        Symbol::Jet(jet) => {
            let next = jet.index.plus(i);
            if next.order() > max {
                return Err(Error::OrderOverflow {
                    needed: next.order(),
                    max,
                });
            }
            Ok(Poly::symbol(Symbol::Jet(Jet::new(jet.dep, next))))
        }
    })
}

pub(crate) fn total_derivative_multi_poly(ctx: &JetContext, p: &Poly, index: &MultiIndex) -> Result<Poly> {
    let mut out = p.clone();
    for i in index.directions() {
        out = total_derivative_poly(ctx, &out, i)?;
    }
    Ok(out)
}

/// `D_i e` for the independent variable with index `i`.
pub fn total_derivative(ctx: &JetContext, e: &Expr, i: usize) -> Result<Expr> {
    check_order(ctx, e, 1)?;
    Ok(total_derivative_poly(ctx, &Poly::from_expr(e), i)?.to_expr())
}

/// `D_x e` by variable name.
pub fn total_derivative_by_name(ctx: &JetContext, e: &Expr, name: &str) -> Result<Expr> {
    let i = ctx
        .independent_index(name)
        .ok_or_else(|| Error::UndeclaredSymbol(name.to_string()))?;
    total_derivative(ctx, e, i)
}

/// `D_J e`; independent of the order in which the directions are applied.
/// The sign of `(-D)_J` is left to the caller.
pub fn total_derivative_multi(ctx: &JetContext, e: &Expr, index: &MultiIndex) -> Result<Expr> {
    if index.len() != ctx.p() {
        return Err(Error::UndeclaredSymbol(format!("multi-index of length {}", index.len())));
    }
    check_order(ctx, e, index.order())?;
    Ok(total_derivative_multi_poly(ctx, &Poly::from_expr(e), index)?.to_expr())
}

fn check_order(ctx: &JetContext, e: &Expr, raise: u32) -> Result<()> {
    let needed = e.jet_order() + raise;
    if needed > ctx.max_order() && e.symbols().iter().any(|s| matches!(s, Symbol::Jet(_))) {
        return Err(Error::OrderOverflow {
            needed,
            max: ctx.max_order(),
        });
    }
    Ok(())
}

/// Lie characteristic `Q^α = φ^α − ξ^i u^α_i`, one entry per dependent
/// variable.
pub fn lie_characteristic(ctx: &JetContext, field: &VectorField) -> Vec<Expr> {
    (0..ctx.q())
        .map(|alpha| {
            let mut q = Poly::from_expr(&field.phi[alpha]);
            for (i, xi) in field.xi.iter().enumerate() {
                let u_i = Poly::symbol(Symbol::Jet(Jet::new(alpha, MultiIndex::unit(ctx.p(), i))));
                q = q.sub(&Poly::from_expr(xi).mul(&u_i));
            }
            q.to_expr()
        })
        .collect()
}
