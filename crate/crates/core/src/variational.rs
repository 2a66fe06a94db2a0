//! Euler-Lagrange operator, divergences and null Lagrangians, exactness in
//! one independent variable, and variational-symmetry checks.

use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::expr::canon::{r64_to_big, Atom, Poly};
use crate::expr::{is_zero, opaque_coefficients, partial_poly, Check, Expr, Jet, JetContext, MultiIndex, Sampler, Symbol, Verdict};
use crate::jet::{total_derivative_multi_poly, total_derivative_poly};
use crate::par::{self, Execution};
use crate::symmetry::{apply, check_symmetry, mu_prolong, ordinary_prolong, Equation, HorizontalOneForm, VectorField};

/// A Lagrangian density `L(x, u^(n))`. The context must leave room for the
/// Euler-Lagrange operator, which doubles the jet order.
#[derive(Debug, Clone, PartialEq)]
pub struct Lagrangian {
    pub density: Expr,
}

impl Lagrangian {
    pub fn new(ctx: &JetContext, density: Expr) -> Result<Self> {
        for s in density.symbols() {
            ctx.check_symbol(&s)?;
        }
        let needed = 2 * density.jet_order();
        if needed > ctx.max_order() {
            return Err(Error::OrderOverflow {
                needed,
                max: ctx.max_order(),
            });
        }
        Ok(Lagrangian {
            density: density.normalize(),
        })
    }

    pub fn order(&self) -> u32 {
        self.density.jet_order()
    }
}

/// `E_α(L)` for each dependent variable, with the individual terms
/// `(−1)^{|J|} D_J ∂L/∂u^α_J` that were summed.
#[derive(Debug, Clone, PartialEq)]
pub struct ELResult {
    pub equations: Vec<Expr>,
    pub provenance: Vec<Vec<(MultiIndex, Expr)>>,
}

fn jets_of(p: &Poly) -> Vec<Jet> {
    p.symbols()
        .into_iter()
        .filter_map(|s| match s {
            Symbol::Jet(j) => Some(j),
            _ => None,
        })
        .collect()
}

fn euler_lagrange_poly(ctx: &JetContext, density: &Poly) -> Result<Vec<Vec<(MultiIndex, Poly)>>> {
    let jets = jets_of(density);
    let terms = par::try_map(Execution::default(), &jets, |jet| -> Result<Poly> {
        let dl = partial_poly(density, &Symbol::Jet(jet.clone()));
        let d = total_derivative_multi_poly(ctx, &dl, &jet.index)?;
        Ok(if jet.order() % 2 == 1 { d.neg() } else { d })
    })?;
    let mut out = vec![Vec::new(); ctx.q()];
    for (jet, term) in jets.into_iter().zip(terms) {
        out[jet.dep].push((jet.index, term));
    }
    Ok(out)
}

/// `E_α(L) = Σ_J (−1)^{|J|} D_J ∂L/∂u^α_J`, summed over the coordinates
/// occurring in `L`.
pub fn euler_lagrange(ctx: &JetContext, l: &Lagrangian) -> Result<ELResult> {
    let terms = euler_lagrange_poly(ctx, &Poly::from_expr(&l.density))?;
    let mut equations = Vec::with_capacity(ctx.q());
    let mut provenance = Vec::with_capacity(ctx.q());
    for per_dep in terms {
        let mut sum = Poly::zero();
        for (_, t) in &per_dep {
            sum.add_assign(t);
        }
        equations.push(sum.to_expr());
        provenance.push(per_dep.into_iter().map(|(j, t)| (j, t.to_expr())).collect());
    }
    Ok(ELResult { equations, provenance })
}

/// `Div ξ = Σ_i D_i ξ^i`.
pub fn total_divergence(ctx: &JetContext, xi: &[Expr]) -> Result<Expr> {
    if xi.len() != ctx.p() {
        return Err(Error::VectorField(format!("expected {} components, got {}", ctx.p(), xi.len())));
    }
    let mut sum = Poly::zero();
    for (i, x) in xi.iter().enumerate() {
        sum.add_assign(&total_derivative_poly(ctx, &Poly::from_expr(x), i)?);
    }
    Ok(sum.to_expr())
}

/// Zero test on every component of `E(L)`.
pub fn is_null_lagrangian(ctx: &JetContext, l: &Lagrangian, sampler: &Sampler) -> Result<Vec<Check>> {
    let el = euler_lagrange(ctx, l)?;
    Ok(el.equations.into_iter().map(|e| Check::new(ctx, e, sampler)).collect())
}

/// `L + Div ξ`.
pub fn gauge_shift(ctx: &JetContext, l: &Lagrangian, xi: &[Expr]) -> Result<Lagrangian> {
    let div = total_divergence(ctx, xi)?;
    Lagrangian::new(ctx, &l.density + &div)
}

fn integration_failure(v: &str, why: &str) -> Error {
    Error::PatternUnsupported(format!("cannot integrate with respect to `{v}`: {why}"))
}

/// `∫ v^k e^{cv} dv` for a non-negative integer `k` and rational `c ≠ 0`, as
/// a polynomial in `v` (without the exponential factor).
fn exp_moment(k: i64, c: &BigRational, v: &Poly) -> Poly {
    let mut out = Poly::zero();
    let mut falling = BigRational::one();
    let mut c_pow = c.clone();
    for j in 0..=k {
        let mut coef = &falling / &c_pow;
        if j % 2 == 1 {
            coef = -coef;
        }
        let power = v.pow_rational(Rational64::from_integer(k - j));
        out.add_assign(&power.scale(&coef));
        falling *= BigRational::from_integer(BigInt::from(k - j));
        c_pow *= c;
    }
    out
}

/// Antiderivative of `p` with respect to the symbol `v`, for sums of
/// `v^k · e^{cv + g} · rest` with `rest` and `g` free of `v` and `c` a
/// rational constant. `v^{-1}` integrates to `ln(v)`.
fn integrate(p: &Poly, v: &Symbol, name: &str) -> Result<Poly> {
    let var = Poly::symbol(v.clone());
    let var_atom = Atom::Sym(v.clone());
    let mut out = Poly::zero();
    for (mono, coef) in p.terms() {
        let mut k = Rational64::zero();
        let mut rate: Option<BigRational> = None;
        let mut rest = Poly::constant(coef.clone());
        for (atom, e) in &mono.0 {
            if *atom == var_atom {
                k = *e;
                continue;
            }
            let inner = match atom {
                Atom::Sym(_) => None,
                Atom::Exp(arg) => Some(arg),
                Atom::Ln(arg) | Atom::Pow(arg) => {
                    if arg.symbols().contains(v) {
                        return Err(integration_failure(name, "variable inside a logarithm or radical"));
                    }
                    None
                }
                Atom::Apply(..) => {
                    if Poly::from_atom(atom.clone()).symbols().contains(v) {
                        return Err(integration_failure(name, "variable inside an opaque function"));
                    }
                    None
                }
            };
            if let Some(arg) = inner {
                let slope = partial_poly(arg, v);
                if !slope.is_zero() {
                    let c = slope
                        .as_constant()
                        .ok_or_else(|| integration_failure(name, "exponent is not affine with constant slope"))?;
                    if *e != Rational64::one() {
                        return Err(integration_failure(name, "unmerged exponential"));
                    }
                    rate = Some(c);
                }
            }
            let mut single = std::collections::BTreeMap::new();
            single.insert(atom.clone(), *e);
            rest = rest.mul(&Poly::term(BigRational::one(), single));
        }
        // `rest` still carries the exponential when there is one.
        let term = match rate {
            None => {
                if k == -Rational64::one() {
                    rest.mul(&Poly::ln_of(&var))
                } else {
                    let k1 = k + Rational64::one();
                    rest.mul(&var.pow_rational(k1)).scale(&r64_to_big(k1).recip())
                }
            }
            Some(c) => {
                if !k.is_integer() || k.is_negative() {
                    return Err(integration_failure(name, "non-polynomial factor next to an exponential"));
                }
                rest.mul(&exp_moment(k.to_integer(), &c, &var))
            }
        };
        out.add_assign(&term);
    }
    Ok(out)
}

/// `H` with `D_x H = e`, by stripping the top jet coordinate one order at a
/// time. The additive constant is 0. Requires `p = q = 1`.
pub fn horizontal_antiderivative(ctx: &JetContext, e: &Expr) -> Result<Expr> {
    if ctx.p() != 1 {
        return Err(Error::NotOrdinary(ctx.p()));
    }
    if ctx.q() != 1 {
        return Err(Error::NonScalar(ctx.q()));
    }
    match eliminate(ctx, &Poly::from_expr(e)) {
        Ok(h) => Ok(h.to_expr()),
        Err(Error::PatternUnsupported(why)) => {
            let l = Lagrangian::new(ctx, e.clone())?;
            let el = euler_lagrange(ctx, &l)?;
            if is_zero(ctx, &el.equations[0], &Sampler::default()).is_zero() {
                Err(Error::PatternUnsupported(why))
            } else {
                Err(Error::NotExact(ctx.display(&el.equations[0])))
            }
        }
        Err(other) => Err(other),
    }
}

fn eliminate(ctx: &JetContext, e: &Poly) -> Result<Poly> {
    let x = Symbol::Indep(0);
    let mut rem = e.clone();
    let mut h = Poly::zero();
    while !rem.is_zero() {
        let top = jets_of(&rem).into_iter().map(|j| j.order()).max();
        match top {
            None => {
                h.add_assign(&integrate(&rem, &x, &ctx.independent_names()[0])?);
                return Ok(h);
            }
            Some(0) => {
                return Err(Error::PatternUnsupported(
                    "remainder depends on the dependent variable but not on its derivatives".into(),
                ));
            }
            Some(n) => {
                let un = Symbol::Jet(Jet::new(0, MultiIndex::new(vec![n])));
                let below = Symbol::Jet(Jet::new(0, MultiIndex::new(vec![n - 1])));
                let a = partial_poly(&rem, &un);
                if a.is_zero() || a.symbols().contains(&un) {
                    return Err(Error::PatternUnsupported(format!(
                        "not affine in `{}`",
                        ctx.symbol_name(&un)
                    )));
                }
                let g = integrate(&a, &below, &ctx.symbol_name(&below))?;
                let next = rem.sub(&total_derivative_poly(ctx, &g, 0)?);
                if jets_of(&next).iter().any(|j| j.order() >= n) {
                    return Err(Error::PatternUnsupported(format!(
                        "`{}` survives elimination",
                        ctx.symbol_name(&un)
                    )));
                }
                h.add_assign(&g);
                rem = next;
            }
        }
    }
    Ok(h)
}

/// Residual of the direct-method condition `D_x L − lhs` (p = 1).
pub fn direct_method_check(ctx: &JetContext, l: &Lagrangian, eq: &Equation, sampler: &Sampler) -> Result<Check> {
    if ctx.p() != 1 {
        return Err(Error::NotOrdinary(ctx.p()));
    }
    let dl = total_derivative_poly(ctx, &Poly::from_expr(&l.density), 0)?.to_expr();
    Ok(Check::new(ctx, Expr::sum(vec![dl, -eq.lhs.clone()]), sampler))
}

/// `E_α(L) − m·lhs` for each multiplier `m`, with `α` the dependent variable
/// of the equation's leading coordinate.
pub fn el_inverse_check(
    ctx: &JetContext,
    l: &Lagrangian,
    eq: &Equation,
    multipliers: &[Expr],
    sampler: &Sampler,
) -> Result<Vec<(Expr, Check)>> {
    let el = euler_lagrange(ctx, l)?;
    let e = &el.equations[eq.leading.dep];
    Ok(multipliers
        .iter()
        .map(|m| {
            let raw = Expr::sum(vec![e.clone(), -(m * &eq.lhs)]);
            (m.clone(), Check::new(ctx, raw, sampler))
        })
        .collect())
}

/// Default multipliers for [`el_inverse_check`]: `1` and `−1`.
pub fn default_multipliers() -> Vec<Expr> {
    vec![Expr::one(), Expr::int(-1)]
}

/// Outcome of a variational-symmetry check.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationalSymmetry {
    pub euler_lagrange: Expr,
    /// The Euler-Lagrange equation in solved form, when one was found.
    pub equation: Option<Equation>,
    pub check: Check,
    /// Set when no solved form exists and `check` holds the residual off the
    /// solution manifold; a zero residual is then sufficient but not
    /// necessary.
    pub off_shell: bool,
}

impl VariationalSymmetry {
    pub fn is_symmetry(&self) -> Option<bool> {
        match (&self.check.verdict, self.off_shell) {
            (v, _) if v.is_zero() => Some(true),
            (Verdict::NonZero { .. }, false) => Some(false),
            _ => None,
        }
    }
}

/// Symmetry test of `X` (μ-symmetry if `mu` is given) on the Euler-Lagrange
/// equation of `L`, solved for its highest-order coordinate. Requires q = 1.
pub fn check_variational_symmetry(
    ctx: &JetContext,
    field: &VectorField,
    mu: Option<&HorizontalOneForm>,
    l: &Lagrangian,
    sampler: &Sampler,
) -> Result<VariationalSymmetry> {
    if ctx.q() != 1 {
        return Err(Error::NonScalar(ctx.q()));
    }
    let el = euler_lagrange(ctx, l)?.equations.remove(0);
    let mut candidates = jets_of(&Poly::from_expr(&el));
    candidates.sort_by(|a, b| b.order().cmp(&a.order()).then_with(|| a.cmp(b)));
    let top = candidates.first().map(Jet::order);
    let equation = candidates
        .iter()
        .take_while(|j| Some(j.order()) == top)
        .find_map(|j| Equation::solve_for(ctx, &el, j).ok());
    match equation {
        Some(eq) => {
            let order = eq.lhs.jet_order();
            let check = check_symmetry(ctx, field, mu, &eq, order, sampler)?;
            Ok(VariationalSymmetry {
                euler_lagrange: el,
                equation: Some(eq),
                check,
                off_shell: false,
            })
        }
        None => {
            let order = el.jet_order();
            let prolonged = match mu {
                Some(mu) => mu_prolong(ctx, field, mu, order)?,
                None => ordinary_prolong(ctx, field, order)?,
            };
            let raw = apply(ctx, &prolonged, &el)?;
            Ok(VariationalSymmetry {
                euler_lagrange: el,
                equation: None,
                check: Check::new(ctx, raw, sampler),
                off_shell: true,
            })
        }
    }
}

/// Verdicts per opaque-function coefficient: an expression vanishes for all
/// choices of the opaque functions iff every coefficient does.
pub fn opaque_coefficient_verdicts(ctx: &JetContext, e: &Expr, sampler: &Sampler) -> Vec<(Expr, Verdict)> {
    opaque_coefficients(&e.normalize())
        .into_iter()
        .map(|(atom, coeff)| {
            let v = is_zero(ctx, &coeff, sampler);
            (atom, v)
        })
        .collect()
}
