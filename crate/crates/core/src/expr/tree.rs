use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{One, Zero};

use super::canon::Poly;
use super::context::{Jet, Opaque, Symbol};

/// Immutable symbolic expression tree.
///
/// Trees built by hand or by the parser are arbitrary; [`Expr::normalize`]
/// maps them onto the canonical expanded form.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Num(BigRational),
    Sym(Symbol),
    Add(Arc<[Expr]>),
    Mul(Arc<[Expr]>),
    Pow(Arc<Expr>, Rational64),
    Exp(Arc<Expr>),
    Ln(Arc<Expr>),
    Apply(Opaque, Arc<[Expr]>),
}

impl Expr {
    pub fn zero() -> Self {
        Expr::Num(BigRational::zero())
    }

    pub fn one() -> Self {
        Expr::Num(BigRational::one())
    }

    pub fn int(n: i64) -> Self {
        Expr::Num(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn rational(num: i64, den: i64) -> Self {
        Expr::Num(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn sym(s: Symbol) -> Self {
        Expr::Sym(s)
    }

    pub fn jet(j: Jet) -> Self {
        Expr::Sym(Symbol::Jet(j))
    }

    pub fn sum(terms: Vec<Expr>) -> Self {
        match terms.len() {
            0 => Expr::zero(),
            1 => terms.into_iter().next().unwrap(),
            _ => Expr::Add(terms.into()),
        }
    }

    pub fn product(factors: Vec<Expr>) -> Self {
        match factors.len() {
            0 => Expr::one(),
            1 => factors.into_iter().next().unwrap(),
            _ => Expr::Mul(factors.into()),
        }
    }

    pub fn pow(&self, exponent: Rational64) -> Self {
        Expr::Pow(Arc::new(self.clone()), exponent)
    }

    pub fn powi(&self, n: i64) -> Self {
        self.pow(Rational64::from_integer(n))
    }

    pub fn recip(&self) -> Self {
        self.powi(-1)
    }

    pub fn sqrt(&self) -> Self {
        self.pow(Rational64::new(1, 2))
    }

    pub fn exp(&self) -> Self {
        Expr::Exp(Arc::new(self.clone()))
    }

    pub fn ln(&self) -> Self {
        Expr::Ln(Arc::new(self.clone()))
    }

    pub fn apply(head: Opaque, args: Vec<Expr>) -> Self {
        Expr::Apply(head, args.into())
    }

    /// Canonical normal form: an expanded sum of rational multiples of
    /// atom products, with atoms and terms in a fixed total order.
    pub fn normalize(&self) -> Expr {
        Poly::from_expr(self).to_expr()
    }

    /// True when the normal form is the zero polynomial.
    pub fn is_zero_symbolic(&self) -> bool {
        Poly::from_expr(self).is_zero()
    }

    pub fn as_rational(&self) -> Option<BigRational> {
        Poly::from_expr(self).as_constant()
    }

    /// Children of this node, in order.
    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Num(_) | Expr::Sym(_) => Vec::new(),
            Expr::Add(xs) | Expr::Mul(xs) | Expr::Apply(_, xs) => xs.iter().collect(),
            Expr::Pow(b, _) => vec![b.as_ref()],
            Expr::Exp(a) | Expr::Ln(a) => vec![a.as_ref()],
        }
    }

    /// Rebuilds the tree bottom-up, replacing symbol leaves with `f(sym)`
    /// wherever it returns `Some`.
    pub fn map_symbols(&self, f: &impl Fn(&Symbol) -> Option<Expr>) -> Expr {
        match self {
            Expr::Num(_) => self.clone(),
            Expr::Sym(s) => f(s).unwrap_or_else(|| self.clone()),
            Expr::Add(xs) => Expr::Add(xs.iter().map(|x| x.map_symbols(f)).collect()),
            Expr::Mul(xs) => Expr::Mul(xs.iter().map(|x| x.map_symbols(f)).collect()),
            Expr::Pow(b, r) => Expr::Pow(Arc::new(b.map_symbols(f)), *r),
            Expr::Exp(a) => Expr::Exp(Arc::new(a.map_symbols(f))),
            Expr::Ln(a) => Expr::Ln(Arc::new(a.map_symbols(f))),
            Expr::Apply(h, xs) => {
                Expr::Apply(h.clone(), xs.iter().map(|x| x.map_symbols(f)).collect())
            }
        }
    }

    /// Every symbol occurring anywhere in the tree, sorted and deduplicated.
    pub fn symbols(&self) -> Vec<Symbol> {
        fn walk(e: &Expr, out: &mut Vec<Symbol>) {
            if let Expr::Sym(s) = e {
                out.push(s.clone());
            }
            for c in e.children() {
                walk(c, out);
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out.sort();
        out.dedup();
        out
    }

    /// Opaque function heads occurring in the tree.
    pub fn opaque_heads(&self) -> Vec<Opaque> {
        fn walk(e: &Expr, out: &mut Vec<Opaque>) {
            if let Expr::Apply(h, _) = e {
                out.push(h.clone());
            }
            for c in e.children() {
                walk(c, out);
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out.sort();
        out.dedup();
        out
    }

    /// Highest jet order of any coordinate in the expression (0 for
    /// functions on the base manifold).
    pub fn jet_order(&self) -> u32 {
        self.symbols().iter().map(Symbol::jet_order).max().unwrap_or(0)
    }

    pub fn depends_on(&self, s: &Symbol) -> bool {
        self.symbols().contains(s)
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Self {
        Expr::int(n)
    }
}

impl From<Symbol> for Expr {
    fn from(s: Symbol) -> Self {
        Expr::Sym(s)
    }
}

impl From<BigRational> for Expr {
    fn from(r: BigRational) -> Self {
        Expr::Num(r)
    }
}

fn flatten_add(a: Expr, b: Expr) -> Expr {
    let mut terms = Vec::new();
    for e in [a, b] {
        match e {
            Expr::Add(xs) => terms.extend(xs.iter().cloned()),
            other => terms.push(other),
        }
    }
    Expr::sum(terms)
}

fn flatten_mul(a: Expr, b: Expr) -> Expr {
    let mut factors = Vec::new();
    for e in [a, b] {
        match e {
            Expr::Mul(xs) => factors.extend(xs.iter().cloned()),
            other => factors.push(other),
        }
    }
    Expr::product(factors)
}

impl Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        flatten_add(self, rhs)
    }
}

impl Add for &Expr {
    type Output = Expr;
    fn add(self, rhs: &Expr) -> Expr {
        flatten_add(self.clone(), rhs.clone())
    }
}

impl Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        flatten_mul(self, rhs)
    }
}

impl Mul for &Expr {
    type Output = Expr;
    fn mul(self, rhs: &Expr) -> Expr {
        flatten_mul(self.clone(), rhs.clone())
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        flatten_mul(Expr::int(-1), self)
    }
}

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -self.clone()
    }
}

impl Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        flatten_add(self, -rhs)
    }
}

impl Sub for &Expr {
    type Output = Expr;
    fn sub(self, rhs: &Expr) -> Expr {
        flatten_add(self.clone(), -rhs.clone())
    }
}
