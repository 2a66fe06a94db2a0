use std::collections::BTreeMap;

use num_rational::Rational64;
use num_traits::{One, Zero};

use super::canon::{r64_to_big, Atom, Poly};
use super::context::{JetContext, Symbol};
use super::tree::Expr;
use crate::error::Result;

/// Applies the derivation that sends each symbol `s` to `image(s)`, extended
/// to atoms by the chain rule. Opaque applications produce formal partials.
pub(crate) fn derive<F>(p: &Poly, image: &F) -> Result<Poly>
where
    F: Fn(&Symbol) -> Result<Poly>,
{
    let mut memo = BTreeMap::new();
    derive_memo(p, image, &mut memo)
}

fn derive_memo<F>(p: &Poly, image: &F, memo: &mut BTreeMap<Atom, Poly>) -> Result<Poly>
where
    F: Fn(&Symbol) -> Result<Poly>,
{
    let mut out = Poly::zero();
    for (m, c) in p.terms() {
        for (atom, e) in &m.0 {
            let da = match memo.get(atom) {
                Some(d) => d.clone(),
                None => {
                    let d = derive_atom(atom, image, memo)?;
                    memo.insert(atom.clone(), d.clone());
                    d
                }
            };
            if da.is_zero() {
                continue;
            }
            let mut raw = m.0.clone();
            let lowered = *e - Rational64::one();
            if lowered.is_zero() {
                raw.remove(atom);
            } else {
                raw.insert(atom.clone(), lowered);
            }
            let rest = Poly::term(c * r64_to_big(*e), raw);
            out.add_assign(&rest.mul(&da));
        }
    }
    Ok(out)
}

/// Derivative of the atom's base (for a power atom `g^r`, of `g`).
fn derive_atom<F>(atom: &Atom, image: &F, memo: &mut BTreeMap<Atom, Poly>) -> Result<Poly>
where
    F: Fn(&Symbol) -> Result<Poly>,
{
    Ok(match atom {
        Atom::Sym(s) => image(s)?,
        Atom::Exp(a) => {
            let da = derive_memo(a, image, memo)?;
            da.mul(&Poly::from_atom(atom.clone()))
        }
        Atom::Ln(a) => {
            let da = derive_memo(a, image, memo)?;
            if da.is_zero() {
                da
            } else {
                da.mul(&a.pow_rational(-Rational64::one()))
            }
        }
        Atom::Pow(b) => derive_memo(b, image, memo)?,
        Atom::Apply(head, args) => {
            let mut out = Poly::zero();
            for (slot, arg) in args.iter().enumerate() {
                let da = derive_memo(arg, image, memo)?;
                if da.is_zero() {
                    continue;
                }
                let partial = Poly::apply_of(head.differentiated(slot), args.clone());
                out.add_assign(&partial.mul(&da));
            }
            out
        }
    })
}

/// Formal partial derivative with respect to `s`, all other symbols held
/// fixed. The result is normalized.
pub fn partial(ctx: &JetContext, e: &Expr, s: &Symbol) -> Result<Expr> {
    ctx.check_symbol(s)?;
    let p = Poly::from_expr(e);
    Ok(partial_poly(&p, s).to_expr())
}

pub(crate) fn partial_poly(p: &Poly, s: &Symbol) -> Poly {
    let target = s.clone();
    derive(p, &|sym: &Symbol| Ok(if *sym == target { Poly::one() } else { Poly::zero() }))
        .expect("partial derivative is total")
}

/// Simultaneous substitution of symbols, followed by normalization.
pub fn substitute(ctx: &JetContext, e: &Expr, bindings: &[(Symbol, Expr)]) -> Result<Expr> {
    for (s, v) in bindings {
        ctx.check_symbol(s)?;
        for t in v.symbols() {
            ctx.check_symbol(&t)?;
        }
    }
    let map: BTreeMap<&Symbol, &Expr> = bindings.iter().map(|(s, v)| (s, v)).collect();
    Ok(e.map_symbols(&|s| map.get(s).map(|v| (*v).clone())).normalize())
}

/// Splits a normalized expression into its coefficients with respect to the
/// opaque-function atoms it contains: each entry pairs a product of opaque
/// atoms (1 for the opaque-free part) with its coefficient.
pub fn opaque_coefficients(e: &Expr) -> Vec<(Expr, Expr)> {
    let p = Poly::from_expr(e);
    let mut groups: BTreeMap<BTreeMap<Atom, Rational64>, Poly> = BTreeMap::new();
    for (m, c) in p.terms() {
        let (opaque, rest): (BTreeMap<_, _>, BTreeMap<_, _>) =
            m.0.iter().map(|(a, e)| (a.clone(), *e)).partition(|(a, _)| matches!(a, Atom::Apply(..)));
        groups
            .entry(opaque)
            .or_insert_with(Poly::zero)
            .add_assign(&Poly::term(c.clone(), rest));
    }
    groups
        .into_iter()
        .filter(|(_, coeff)| !coeff.is_zero())
        .map(|(key, coeff)| (Poly::term(One::one(), key).to_expr(), coeff.to_expr()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn ctx() -> JetContext {
        JetContext::new(&["x"], &["u"], 4).unwrap().with_opaque("F", 3).unwrap()
    }

    fn p(c: &JetContext, s: &str) -> Expr {
        parse(s, c).unwrap()
    }

    #[test]
    fn partial_of_linear_term() {
        let c = ctx();
        let e = p(&c, "x*u_xx");
        let d = partial(&c, &e, &c.jet("u_xx").unwrap()).unwrap();
        assert_eq!(d, p(&c, "x").normalize());
    }

    #[test]
    fn partial_through_exp() {
        let c = ctx();
        let e = p(&c, "(x+x^2)*exp(u)");
        let d = partial(&c, &e, &c.jet("u").unwrap()).unwrap();
        assert_eq!(d, e.normalize());
    }

    #[test]
    fn opaque_chain_rule_base_case() {
        let c = JetContext::new(&["x"], &["u"], 2).unwrap().with_opaque("F", 1).unwrap();
        let e = p(&c, "F(u_x)");
        assert_eq!(partial(&c, &e, &c.var("x").unwrap()).unwrap(), Expr::zero());
        let d = partial(&c, &e, &c.jet("u_x").unwrap()).unwrap();
        assert_eq!(d, p(&c, "F[1](u_x)").normalize());
    }

    #[test]
    fn ln_and_radical_derivatives() {
        let c = ctx();
        let x = c.var("x").unwrap();
        let d = partial(&c, &p(&c, "ln(1+x^2)"), &x).unwrap();
        assert_eq!(d, p(&c, "2*x/(1+x^2)").normalize());
        let d = partial(&c, &p(&c, "sqrt(1+x)"), &x).unwrap();
        assert_eq!(d, p(&c, "1/2*(1+x)^(-1/2)").normalize());
    }

    #[test]
    fn substitution_examples() {
        let c = JetContext::new(&["x", "t"], &["u"], 2)
            .unwrap()
            .with_params(&["lambda", "tau"])
            .unwrap();
        let e = p(&c, "u_xx - u");
        let r = substitute(&c, &e, &[(c.jet("u_xx").unwrap(), p(&c, "u"))]).unwrap();
        assert_eq!(r, Expr::zero());

        let lq = p(&c, "lambda*(u - x^2*u_x - t*u_t)");
        let r = substitute(&c, &lq, &[(c.param("lambda").unwrap(), Expr::zero())]).unwrap();
        assert_eq!(r, Expr::zero());

        let tq = p(&c, "tau*(u - x^2*u_x - t*u_t)");
        let r = substitute(
            &c,
            &tq,
            &[
                (c.param("tau").unwrap(), Expr::one()),
                (c.jet("u_t").unwrap(), Expr::zero()),
                (c.jet("u_x").unwrap(), Expr::zero()),
            ],
        )
        .unwrap();
        assert_eq!(r, p(&c, "u").normalize());
    }

    #[test]
    fn substitution_is_simultaneous() {
        let c = JetContext::new(&["x"], &["u"], 1).unwrap();
        let e = p(&c, "x + 2*u");
        let r = substitute(&c, &e, &[(c.var("x").unwrap(), p(&c, "u")), (c.jet("u").unwrap(), p(&c, "x"))]).unwrap();
        assert_eq!(r, p(&c, "u + 2*x").normalize());
    }

    #[test]
    fn opaque_coefficient_split() {
        let c = JetContext::new(&["x"], &["u"], 2).unwrap().with_opaque("F", 1).unwrap();
        let e = p(&c, "x*F(u) + u*F(u) + x^2 + F[1](u)*F(u)").normalize();
        let parts = opaque_coefficients(&e);
        assert_eq!(parts.len(), 3);
        assert!(parts.iter().any(|(k, v)| *k == Expr::one() && *v == p(&c, "x^2").normalize()));
        assert!(parts.iter().any(|(k, v)| *k == p(&c, "F(u)").normalize() && *v == p(&c, "x+u").normalize()));
    }
}
