use std::collections::BTreeMap;

use super::{check_compatibility, HorizontalOneForm, VectorField};
use crate::error::{Error, Result};
use crate::expr::canon::Poly;
use crate::expr::{derive, Expr, Jet, JetContext, MultiIndex, Symbol};
use crate::jet::{lie_characteristic, total_derivative_poly};
use crate::par::{self, Execution};

#[derive(Debug, Clone, PartialEq)]
pub enum Flavor {
    Ordinary,
    Mu(HorizontalOneForm),
}

/// Which correction term the gap recursion `F_{J,i} = (D_i+λ_i)F_J + λ_i·T`
/// uses: `T = D_J Q` (consistent with the direct formula) or `T = D_i Q`
/// (as it is sometimes printed; disagrees already at first order).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecursionForm {
    Corrected,
    Literal,
}

/// `Y = X + Σ Ψ^α_J ∂_{u^α_J}` up to a fixed order.
#[derive(Debug, Clone, PartialEq)]
pub struct ProlongedVectorField {
    pub base: VectorField,
    pub order: u32,
    pub flavor: Flavor,
    psi: BTreeMap<Jet, Expr>,
    pub warnings: Vec<String>,
}

impl ProlongedVectorField {
    /// `Ψ^α_J`; for `|J| = 0` this is `φ^α`.
    pub fn coefficient(&self, jet: &Jet) -> Option<&Expr> {
        if jet.order() == 0 {
            self.base.phi.get(jet.dep)
        } else {
            self.psi.get(jet)
        }
    }

    /// Coefficient by jet spelling, e.g. `u_xt`.
    pub fn coefficient_named(&self, ctx: &JetContext, spelling: &str) -> Result<&Expr> {
        match ctx.jet(spelling)? {
            Symbol::Jet(j) => self
                .coefficient(&j)
                .ok_or_else(|| Error::OrderMismatch { found: j.order(), order: self.order }),
            _ => unreachable!(),
        }
    }

    /// Coefficients with `1 <= |J| <= order`, sorted by jet coordinate.
    pub fn coefficients(&self) -> impl Iterator<Item = (&Jet, &Expr)> {
        self.psi.iter()
    }
}

fn targets(ctx: &JetContext, n: u32) -> Vec<Jet> {
    (0..ctx.q())
        .flat_map(|dep| MultiIndex::all_of_order(ctx.p(), n).into_iter().map(move |k| Jet::new(dep, k)))
        .collect()
}

/// Splits `K` into the predecessor `K - e_i` and the last direction `i`.
fn predecessor(k: &Jet) -> (Jet, usize) {
    let i = k.index.last_direction().expect("order >= 1");
    (Jet::new(k.dep, k.index.minus(i).unwrap()), i)
}

fn check_order(ctx: &JetContext, k: u32) -> Result<()> {
    if k > ctx.max_order() {
        Err(Error::OrderOverflow {
            needed: k,
            max: ctx.max_order(),
        })
    } else {
        Ok(())
    }
}

/// Shared recursion `Ψ_{J,i} = (D_i+λ_i)Ψ_J − u_{J,m}(D_i+λ_i)ξ^m`; with no
/// λ this is the ordinary prolongation formula.
fn prolong_direct(ctx: &JetContext, field: &VectorField, lambda: Option<&[Poly]>, k: u32) -> Result<BTreeMap<Jet, Poly>> {
    check_order(ctx, k)?;
    let p = ctx.p();
    let xi: Vec<Poly> = field.xi.iter().map(Poly::from_expr).collect();
    // (D_i + λ_i) ξ^m
    let mut shifted_xi = vec![Vec::with_capacity(p); p];
    for (i, row) in shifted_xi.iter_mut().enumerate() {
        for x in &xi {
            let mut d = total_derivative_poly(ctx, x, i)?;
            if let Some(l) = lambda {
                d.add_assign(&l[i].mul(x));
            }
            row.push(d);
        }
    }
    let mut psi: BTreeMap<Jet, Poly> = BTreeMap::new();
    for (dep, phi) in field.phi.iter().enumerate() {
        psi.insert(Jet::new(dep, MultiIndex::zero(p)), Poly::from_expr(phi));
    }
    for n in 1..=k {
        let level = targets(ctx, n);
        let values = par::try_map(Execution::default(), &level, |target| -> Result<Poly> {
            let (prev, i) = predecessor(target);
            let base = &psi[&prev];
            let mut out = total_derivative_poly(ctx, base, i)?;
            if let Some(l) = lambda {
                out.add_assign(&l[i].mul(base));
            }
            for (m, sx) in shifted_xi[i].iter().enumerate() {
                if sx.is_zero() {
                    continue;
                }
                let u = Poly::symbol(Symbol::Jet(Jet::new(prev.dep, prev.index.plus(m))));
                out = out.sub(&u.mul(sx));
            }
            Ok(out)
        })?;
        psi.extend(level.into_iter().zip(values));
    }
    Ok(psi)
}

fn finish(field: &VectorField, order: u32, flavor: Flavor, psi: BTreeMap<Jet, Poly>, warnings: Vec<String>) -> ProlongedVectorField {
    ProlongedVectorField {
        base: field.clone(),
        order,
        flavor,
        psi: psi
            .into_iter()
            .filter(|(j, _)| j.order() > 0)
            .map(|(j, p)| (j, p.to_expr()))
            .collect(),
        warnings,
    }
}

/// Ordinary `k`-th prolongation: `Ψ_{J,i} = D_i Ψ_J − u_{J,m} D_i ξ^m`,
/// `Ψ_0 = φ`.
pub fn ordinary_prolong(ctx: &JetContext, field: &VectorField, k: u32) -> Result<ProlongedVectorField> {
    let psi = prolong_direct(ctx, field, None, k)?;
    Ok(finish(field, k, Flavor::Ordinary, psi, Vec::new()))
}

fn mu_preconditions(ctx: &JetContext, mu: &HorizontalOneForm) -> Result<Vec<String>> {
    if ctx.q() != 1 {
        return Err(Error::NonScalar(ctx.q()));
    }
    let compat = check_compatibility(ctx, mu)?;
    let mut warnings = Vec::new();
    if let Some(((i, j), r)) = compat.witness() {
        let msg = format!(
            "one-form is not compatible: D_{}λ_{} − D_{}λ_{} = {}",
            ctx.independent_names()[*j],
            ctx.independent_names()[*i],
            ctx.independent_names()[*i],
            ctx.independent_names()[*j],
            ctx.display(r)
        );
        log::warn!("{msg}");
        warnings.push(msg);
    }
    Ok(warnings)
}

/// μ-prolongation by the direct formula
/// `Ψ_{J,i} = (D_i+λ_i)Ψ_J − u_{J,m}(D_i+λ_i)ξ^m`.
///
/// An incompatible μ is accepted but recorded in `warnings`; mixed
/// coefficients then depend on the (fixed) order in which directions are
/// taken.
pub fn mu_prolong(ctx: &JetContext, field: &VectorField, mu: &HorizontalOneForm, k: u32) -> Result<ProlongedVectorField> {
    let warnings = mu_preconditions(ctx, mu)?;
    let lambda: Vec<Poly> = mu.lambda.iter().map(Poly::from_expr).collect();
    let psi = prolong_direct(ctx, field, Some(&lambda), k)?;
    Ok(finish(field, k, Flavor::Mu(mu.clone()), psi, warnings))
}

/// μ-prolongation as ordinary prolongation plus the gap `F_J`, built by
/// `F_{J,i} = (D_i+λ_i)F_J + λ_i·T` from `F_0 = 0` (see [`RecursionForm`]).
pub fn mu_prolong_recursive(
    ctx: &JetContext,
    field: &VectorField,
    mu: &HorizontalOneForm,
    k: u32,
    form: RecursionForm,
) -> Result<ProlongedVectorField> {
    let warnings = mu_preconditions(ctx, mu)?;
    let ordinary = prolong_direct(ctx, field, None, k)?;
    let p = ctx.p();
    let lambda: Vec<Poly> = mu.lambda.iter().map(Poly::from_expr).collect();
    let q = Poly::from_expr(&lie_characteristic(ctx, field)[0]);
    let d_q: Vec<Poly> = match form {
        RecursionForm::Literal => (0..p).map(|i| total_derivative_poly(ctx, &q, i)).collect::<Result<_>>()?,
        RecursionForm::Corrected => Vec::new(),
    };

    let zero = MultiIndex::zero(p);
    let mut gap: BTreeMap<MultiIndex, Poly> = BTreeMap::new();
    let mut djq: BTreeMap<MultiIndex, Poly> = BTreeMap::new();
    gap.insert(zero.clone(), Poly::zero());
    djq.insert(zero, q);
    for n in 1..=k {
        let level = MultiIndex::all_of_order(p, n);
        let values = par::try_map(Execution::default(), &level, |target| -> Result<(Poly, Option<Poly>)> {
            let i = target.last_direction().unwrap();
            let prev = target.minus(i).unwrap();
            let f = &gap[&prev];
            let mut out = total_derivative_poly(ctx, f, i)?;
            out.add_assign(&lambda[i].mul(f));
            let correction = match form {
                RecursionForm::Corrected => &djq[&prev],
                RecursionForm::Literal => &d_q[i],
            };
            out.add_assign(&lambda[i].mul(correction));
            let next_djq = if n < k {
                Some(total_derivative_poly(ctx, &djq[&prev], i)?)
            } else {
                None
            };
            Ok((out, next_djq))
        })?;
        for (target, (f, d)) in level.into_iter().zip(values) {
            if let Some(d) = d {
                djq.insert(target.clone(), d);
            }
            gap.insert(target, f);
        }
    }
    let psi = ordinary
        .into_iter()
        .map(|(jet, phi)| {
            let f = &gap[&jet.index];
            (jet, phi.add(f))
        })
        .collect();
    Ok(finish(field, k, Flavor::Mu(mu.clone()), psi, warnings))
}

/// The prolonged field acting as a derivation:
/// `ξ^i ∂_{x_i} e + Σ Ψ^α_J ∂e/∂u^α_J`.
pub fn apply(ctx: &JetContext, y: &ProlongedVectorField, e: &Expr) -> Result<Expr> {
    let found = e.jet_order();
    if found > y.order {
        return Err(Error::OrderMismatch { found, order: y.order });
    }
    let p = Poly::from_expr(e);
    let image = |s: &Symbol| -> Result<Poly> {
        Ok(match s {
            Symbol::Indep(i) => Poly::from_expr(&y.base.xi[*i]),
            Symbol::Param(_) => Poly::zero(),
            Symbol::Jet(j) => Poly::from_expr(y.coefficient(j).ok_or_else(|| Error::OrderMismatch {
                found: j.order(),
                order: y.order,
            })?),
        })
    };
    let _ = ctx;
    Ok(derive(&p, &image)?.to_expr())
}
