//! Canonical normal form.
//!
//! A [`Poly`] is a finite map from monomials to nonzero rational
//! coefficients; a [`Mono`] maps atoms to nonzero exponents. Atoms are
//! symbols, `exp`/`ln` of normal forms, opaque applications with normal
//! arguments, and residual powers `g^r` of a normal form `g`.
//!
//! Invariants maintained by every constructor:
//! - at most one `exp` atom per monomial, with exponent 1 and nonzero argument
//!   (`exp(a)·exp(b) = exp(a+b)`, `exp(0) = 1`);
//! - `ln(1) = 0`;
//! - a power atom `g^r` has `r` non-integer, or `r` a negative integer with
//!   `g` a sum whose leading coefficient is 1. Positive integer powers are
//!   always expanded and integer powers of a single monomial distributed.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{One, Signed, Zero};

use super::context::{Opaque, Symbol};
use super::tree::Expr;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) enum Atom {
    Sym(Symbol),
    Exp(Poly),
    Ln(Poly),
    Apply(Opaque, Vec<Poly>),
    Pow(Poly),
}

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) struct Mono(pub(crate) BTreeMap<Atom, Rational64>);

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) struct Poly(pub(crate) BTreeMap<Mono, BigRational>);

pub(crate) fn r64_to_big(r: Rational64) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

fn big_pow(c: &BigRational, n: i64) -> BigRational {
    let e = n.unsigned_abs();
    let mut acc = BigRational::one();
    let mut base = c.clone();
    let mut k = e;
    while k > 0 {
        if k & 1 == 1 {
            acc *= &base;
        }
        base = &base * &base;
        k >>= 1;
    }
    if n < 0 {
        acc.recip()
    } else {
        acc
    }
}

/// `c^r` when it is rational.
fn exact_power(c: &BigRational, r: Rational64) -> Option<BigRational> {
    let q = u32::try_from(*r.denom()).ok()?;
    if c.is_negative() && q % 2 == 0 {
        return None;
    }
    let root = |n: &BigInt| -> Option<BigInt> {
        let mag = n.abs();
        let k = mag.nth_root(q);
        if num_traits::pow(k.clone(), q as usize) == mag {
            Some(if n.is_negative() { -k } else { k })
        } else {
            None
        }
    };
    let base = BigRational::new(root(c.numer())?, root(c.denom())?);
    if base.is_zero() && *r.numer() < 0 {
        return None;
    }
    Some(big_pow(&base, *r.numer()))
}

impl Poly {
    pub(crate) fn zero() -> Self {
        Poly(BTreeMap::new())
    }

    pub(crate) fn one() -> Self {
        Poly::constant(BigRational::one())
    }

    pub(crate) fn constant(c: BigRational) -> Self {
        let mut map = BTreeMap::new();
        if !c.is_zero() {
            map.insert(Mono::default(), c);
        }
        Poly(map)
    }

    /// `atom^1` with coefficient 1; no rewriting is applied.
    pub(crate) fn from_atom(atom: Atom) -> Self {
        let mut mono = BTreeMap::new();
        mono.insert(atom, Rational64::one());
        let mut map = BTreeMap::new();
        map.insert(Mono(mono), BigRational::one());
        Poly(map)
    }

    pub(crate) fn symbol(s: Symbol) -> Self {
        Poly::from_atom(Atom::Sym(s))
    }

    pub(crate) fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub(crate) fn is_one(&self) -> bool {
        self.as_constant().is_some_and(|c| c.is_one())
    }

    pub(crate) fn as_constant(&self) -> Option<BigRational> {
        match self.0.len() {
            0 => Some(BigRational::zero()),
            1 => {
                let (m, c) = self.0.iter().next().unwrap();
                m.0.is_empty().then(|| c.clone())
            }
            _ => None,
        }
    }

    pub(crate) fn single_term(&self) -> Option<(&Mono, &BigRational)> {
        if self.0.len() == 1 {
            self.0.iter().next()
        } else {
            None
        }
    }

    pub(crate) fn terms(&self) -> impl Iterator<Item = (&Mono, &BigRational)> {
        self.0.iter()
    }

    fn is_monic_sum(&self) -> bool {
        self.0.len() >= 2 && self.0.values().next().is_some_and(|c| c.is_one())
    }

    fn accumulate(&mut self, mono: Mono, c: BigRational) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.0.entry(mono) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub(crate) fn add_assign(&mut self, other: &Poly) {
        for (m, c) in &other.0 {
            self.accumulate(m.clone(), c.clone());
        }
    }

    pub(crate) fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        out.add_assign(other);
        out
    }

    pub(crate) fn neg(&self) -> Poly {
        Poly(self.0.iter().map(|(m, c)| (m.clone(), -c)).collect())
    }

    pub(crate) fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub(crate) fn scale(&self, k: &BigRational) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        Poly(self.0.iter().map(|(m, c)| (m.clone(), c * k)).collect())
    }

    /// A single term `coef · Π atom^e`, after applying the merge and
    /// expansion rules.
    pub(crate) fn term(coef: BigRational, raw: BTreeMap<Atom, Rational64>) -> Poly {
        if coef.is_zero() {
            return Poly::zero();
        }
        let mut exp_arg: Option<Poly> = None;
        let mut mono = BTreeMap::new();
        let mut deferred = Vec::new();
        for (atom, e) in raw {
            if e.is_zero() {
                continue;
            }
            match atom {
                Atom::Exp(arg) => {
                    let scaled = arg.scale(&r64_to_big(e));
                    exp_arg = Some(match exp_arg {
                        Some(acc) => acc.add(&scaled),
                        None => scaled,
                    });
                }
                Atom::Pow(base) if e.is_integer() && !base.is_zero() && !(e < Rational64::zero() && base.is_monic_sum()) => {
                    deferred.push(base.pow_rational(e));
                }
                other => {
                    mono.insert(other, e);
                }
            }
        }
        if let Some(arg) = exp_arg {
            if !arg.is_zero() {
                mono.insert(Atom::Exp(arg), Rational64::one());
            }
        }
        let mut map = BTreeMap::new();
        map.insert(Mono(mono), coef);
        let mut out = Poly(map);
        for d in deferred {
            out = out.mul(&d);
        }
        out
    }

    pub(crate) fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (m1, c1) in &self.0 {
            for (m2, c2) in &other.0 {
                let mut raw = m1.0.clone();
                let mut clean = true;
                for (a, e) in &m2.0 {
                    let slot = raw.entry(a.clone()).or_insert_with(Rational64::zero);
                    *slot += *e;
                    if slot.is_zero() || matches!(a, Atom::Exp(_) | Atom::Pow(_)) {
                        clean = false;
                    }
                }
                if clean {
                    out.accumulate(Mono(raw), c1 * c2);
                } else {
                    out.add_assign(&Poly::term(c1 * c2, raw));
                }
            }
        }
        out
    }

    fn pow_atom(base: Poly, r: Rational64) -> Poly {
        let mut mono = BTreeMap::new();
        mono.insert(Atom::Pow(base), r);
        let mut map = BTreeMap::new();
        map.insert(Mono(mono), BigRational::one());
        Poly(map)
    }

    pub(crate) fn pow_rational(&self, r: Rational64) -> Poly {
        if r.is_zero() {
            return Poly::one();
        }
        if self.is_zero() {
            return if r > Rational64::zero() {
                Poly::zero()
            } else {
                Poly::pow_atom(Poly::zero(), r)
            };
        }
        if let Some((m, c)) = self.single_term() {
            if r.is_integer() {
                let n = r.to_integer();
                let raw = m.0.iter().map(|(a, e)| (a.clone(), *e * n)).collect();
                return Poly::term(big_pow(c, n), raw);
            }
            if m.0.is_empty() {
                return match exact_power(c, r) {
                    Some(v) => Poly::constant(v),
                    None => Poly::pow_atom(self.clone(), r),
                };
            }
            if c.is_one() && m.0.len() == 1 {
                let (atom, e) = m.0.iter().next().unwrap();
                match atom {
                    Atom::Pow(_) => {
                        let mut raw = BTreeMap::new();
                        raw.insert(atom.clone(), *e * r);
                        return Poly::term(BigRational::one(), raw);
                    }
                    Atom::Exp(arg) if e.is_one() => {
                        return Poly::exp_of(&arg.scale(&r64_to_big(r)));
                    }
                    _ => {}
                }
            }
            return Poly::pow_atom(self.clone(), r);
        }
        if r.is_integer() {
            let n = r.to_integer();
            if n > 0 {
                let mut acc = Poly::one();
                let mut base = self.clone();
                let mut k = n as u64;
                while k > 0 {
                    if k & 1 == 1 {
                        acc = acc.mul(&base);
                    }
                    k >>= 1;
                    if k > 0 {
                        base = base.mul(&base);
                    }
                }
                return acc;
            }
            let lead = self.0.values().next().unwrap().clone();
            let monic = self.scale(&lead.recip());
            return Poly::pow_atom(monic, r).scale(&big_pow(&lead, n));
        }
        Poly::pow_atom(self.clone(), r)
    }

    pub(crate) fn exp_of(arg: &Poly) -> Poly {
        if arg.is_zero() {
            return Poly::one();
        }
        Poly::from_atom(Atom::Exp(arg.clone()))
    }

    pub(crate) fn ln_of(arg: &Poly) -> Poly {
        if arg.is_one() {
            return Poly::zero();
        }
        Poly::from_atom(Atom::Ln(arg.clone()))
    }

    pub(crate) fn apply_of(head: Opaque, args: Vec<Poly>) -> Poly {
        Poly::from_atom(Atom::Apply(head, args))
    }

    pub(crate) fn from_expr(e: &Expr) -> Poly {
        Poly::from_expr_shared(e, &mut HashMap::new())
    }

    /// Normal forms of shared `Arc` children are memoized by address.
    fn from_expr_shared(e: &Expr, memo: &mut HashMap<*const Expr, Poly>) -> Poly {
        let shared = |child: &Arc<Expr>, memo: &mut HashMap<*const Expr, Poly>| {
            let key = Arc::as_ptr(child);
            if let Some(p) = memo.get(&key) {
                return p.clone();
            }
            let p = Poly::from_expr_shared(child, memo);
            memo.insert(key, p.clone());
            p
        };
        match e {
            Expr::Num(c) => Poly::constant(c.clone()),
            Expr::Sym(s) => Poly::symbol(s.clone()),
            Expr::Add(xs) => {
                let mut out = Poly::zero();
                for x in xs.iter() {
                    out.add_assign(&Poly::from_expr_shared(x, memo));
                }
                out
            }
            Expr::Mul(xs) => {
                let mut out = Poly::one();
                for x in xs.iter() {
                    out = out.mul(&Poly::from_expr_shared(x, memo));
                    if out.is_zero() {
                        break;
                    }
                }
                out
            }
            Expr::Pow(b, r) => shared(b, memo).pow_rational(*r),
            Expr::Exp(a) => Poly::exp_of(&shared(a, memo)),
            Expr::Ln(a) => Poly::ln_of(&shared(a, memo)),
            Expr::Apply(h, xs) => Poly::apply_of(h.clone(), xs.iter().map(|x| Poly::from_expr_shared(x, memo)).collect()),
        }
    }

    /// Tree form. Repeated atoms share one subtree, which keeps evaluation
    /// and re-normalization linear in the number of distinct atoms.
    pub(crate) fn to_expr(&self) -> Expr {
        self.to_expr_shared(&mut HashMap::new())
    }

    fn to_expr_shared<'a>(&'a self, cache: &mut HashMap<&'a Atom, Arc<Expr>>) -> Expr {
        let terms: Vec<Expr> = self
            .0
            .iter()
            .map(|(m, c)| {
                let mut factors = Vec::with_capacity(m.0.len() + 1);
                if !c.is_one() || m.0.is_empty() {
                    factors.push(Expr::Num(c.clone()));
                }
                for (atom, e) in &m.0 {
                    factors.push(factor_expr(atom, *e, cache));
                }
                Expr::product(factors)
            })
            .collect();
        Expr::sum(terms)
    }

    /// Every symbol in the polynomial, including inside atom arguments.
    pub(crate) fn collect_symbols(&self, out: &mut Vec<Symbol>) {
        for m in self.0.keys() {
            for atom in m.0.keys() {
                match atom {
                    Atom::Sym(s) => out.push(s.clone()),
                    Atom::Exp(a) | Atom::Ln(a) | Atom::Pow(a) => a.collect_symbols(out),
                    Atom::Apply(_, args) => args.iter().for_each(|a| a.collect_symbols(out)),
                }
            }
        }
    }

    pub(crate) fn symbols(&self) -> Vec<Symbol> {
        let mut out = Vec::new();
        self.collect_symbols(&mut out);
        out.sort();
        out.dedup();
        out
    }
}

fn factor_expr<'a>(atom: &'a Atom, e: Rational64, cache: &mut HashMap<&'a Atom, Arc<Expr>>) -> Expr {
    let shared = match cache.get(atom) {
        Some(x) => x.clone(),
        None => {
            let x = Arc::new(match atom {
                Atom::Sym(s) => Expr::Sym(s.clone()),
                Atom::Exp(a) => Expr::Exp(Arc::new(a.to_expr_shared(cache))),
                Atom::Ln(a) => Expr::Ln(Arc::new(a.to_expr_shared(cache))),
                Atom::Apply(h, args) => Expr::apply(h.clone(), args.iter().map(|a| a.to_expr_shared(cache)).collect()),
                Atom::Pow(base) => base.to_expr_shared(cache),
            });
            cache.insert(atom, x.clone());
            x
        }
    };
    if matches!(atom, Atom::Pow(_)) || !e.is_one() {
        Expr::Pow(shared, e)
    } else {
        (*shared).clone()
    }
}
