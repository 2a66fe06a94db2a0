use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};

/// Names reserved by the expression grammar.
pub const RESERVED: &[&str] = &["exp", "ln", "sqrt", "D"];

/// Counts of derivatives per independent variable. Mixed partials commute,
/// so the counts are the whole identity of the index.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn zero(p: usize) -> Self {
        MultiIndex(vec![0; p])
    }

    pub fn new(counts: Vec<u32>) -> Self {
        MultiIndex(counts)
    }

    /// The index `e_i` of a single derivative in direction `i`.
    pub fn unit(p: usize, i: usize) -> Self {
        let mut counts = vec![0; p];
        counts[i] = 1;
        MultiIndex(counts)
    }

    pub fn counts(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn plus(&self, i: usize) -> Self {
        let mut counts = self.0.clone();
        counts[i] += 1;
        MultiIndex(counts)
    }

    pub fn add(&self, other: &MultiIndex) -> Self {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `self - e_i`, if the count in direction `i` is positive.
    pub fn minus(&self, i: usize) -> Option<Self> {
        let mut counts = self.0.clone();
        if counts[i] == 0 {
            return None;
        }
        counts[i] -= 1;
        Some(MultiIndex(counts))
    }

    /// `self - other` when `other <= self` componentwise.
    pub fn checked_sub(&self, other: &MultiIndex) -> Option<Self> {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<_>>>()
            .map(MultiIndex)
    }

    /// Last direction with a positive count.
    pub fn last_direction(&self) -> Option<usize> {
        self.0.iter().rposition(|&c| c > 0)
    }

    /// Directions in canonical order, each repeated by its count.
    pub fn directions(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .flat_map(|(i, &c)| std::iter::repeat_n(i, c as usize))
            .collect()
    }

    /// All multi-indices in `p` variables of exactly the given order, sorted.
    pub fn all_of_order(p: usize, order: u32) -> Vec<MultiIndex> {
        fn rec(p: usize, remaining: u32, prefix: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
            if prefix.len() + 1 == p {
                prefix.push(remaining);
                out.push(MultiIndex(prefix.clone()));
                prefix.pop();
                return;
            }
            for c in (0..=remaining).rev() {
                prefix.push(c);
                rec(p, remaining - c, prefix, out);
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        rec(p, order, &mut Vec::with_capacity(p), &mut out);
        out.sort();
        out
    }
}

/// A jet coordinate `u^alpha_J`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Jet {
    pub dep: usize,
    pub index: MultiIndex,
}

impl Jet {
    pub fn new(dep: usize, index: MultiIndex) -> Self {
        Jet { dep, index }
    }

    pub fn order(&self) -> u32 {
        self.index.order()
    }
}

/// Leaf symbols of an expression. Indices refer to the declaring context.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Symbol {
    Indep(usize),
    Param(usize),
    Jet(Jet),
}

impl Symbol {
    pub fn jet_order(&self) -> u32 {
        match self {
            Symbol::Jet(j) => j.order(),
            _ => 0,
        }
    }
}

/// Head of an opaque function application: the function plus the sorted
/// multiset of argument slots it has been formally differentiated in.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Opaque {
    pub func: usize,
    pub partials: Vec<usize>,
}

impl Opaque {
    pub fn new(func: usize) -> Self {
        Opaque {
            func,
            partials: Vec::new(),
        }
    }

    pub fn differentiated(&self, slot: usize) -> Self {
        let mut partials = self.partials.clone();
        let at = partials.partition_point(|&s| s <= slot);
        partials.insert(at, slot);
        Opaque {
            func: self.func,
            partials,
        }
    }
}

/// Variable roster of a truncated jet space `J^k M`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JetContext {
    independent: Vec<String>,
    dependent: Vec<String>,
    max_order: u32,
    params: Vec<String>,
    opaque: Vec<(String, usize)>,
}

fn valid_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric())
}

impl JetContext {
    pub fn new(independent: &[&str], dependent: &[&str], max_order: u32) -> Result<Self> {
        if independent.is_empty() {
            return Err(Error::Context("at least one independent variable is required".into()));
        }
        if dependent.is_empty() {
            return Err(Error::Context("at least one dependent variable is required".into()));
        }
        let mut ctx = JetContext {
            independent: Vec::new(),
            dependent: Vec::new(),
            max_order,
            params: Vec::new(),
            opaque: Vec::new(),
        };
        for name in independent {
            ctx.check_fresh(name)?;
            ctx.independent.push(name.to_string());
        }
        for name in dependent {
            ctx.check_fresh(name)?;
            ctx.dependent.push(name.to_string());
        }
        Ok(ctx)
    }

    pub fn with_params(mut self, names: &[&str]) -> Result<Self> {
        for name in names {
            self.check_fresh(name)?;
            self.params.push(name.to_string());
        }
        Ok(self)
    }

    pub fn with_opaque(mut self, name: &str, arity: usize) -> Result<Self> {
        self.check_fresh(name)?;
        if arity == 0 {
            return Err(Error::Context(format!("opaque function `{name}` needs arity >= 1")));
        }
        self.opaque.push((name.to_string(), arity));
        Ok(self)
    }

    pub fn with_max_order(mut self, max_order: u32) -> Self {
        self.max_order = max_order;
        self
    }

    fn check_fresh(&self, name: &str) -> Result<()> {
        if !valid_identifier(name) {
            return Err(Error::Context(format!("`{name}` is not a valid identifier")));
        }
        if RESERVED.contains(&name) {
            return Err(Error::Context(format!("`{name}` is reserved")));
        }
        if self.lookup_name(name) {
            return Err(Error::Context(format!("`{name}` declared twice")));
        }
        Ok(())
    }

    fn lookup_name(&self, name: &str) -> bool {
        self.independent.iter().any(|n| n == name)
            || self.dependent.iter().any(|n| n == name)
            || self.params.iter().any(|n| n == name)
            || self.opaque.iter().any(|(n, _)| n == name)
    }

    /// Number of independent variables.
    pub fn p(&self) -> usize {
        self.independent.len()
    }

    /// Number of dependent variables.
    pub fn q(&self) -> usize {
        self.dependent.len()
    }

    pub fn max_order(&self) -> u32 {
        self.max_order
    }

    pub fn independent_names(&self) -> &[String] {
        &self.independent
    }

    pub fn dependent_names(&self) -> &[String] {
        &self.dependent
    }

    pub fn param_names(&self) -> &[String] {
        &self.params
    }

    pub fn opaque_functions(&self) -> &[(String, usize)] {
        &self.opaque
    }

    pub fn independent_index(&self, name: &str) -> Option<usize> {
        self.independent.iter().position(|n| n == name)
    }

    pub fn dependent_index(&self, name: &str) -> Option<usize> {
        self.dependent.iter().position(|n| n == name)
    }

    pub fn param_index(&self, name: &str) -> Option<usize> {
        self.params.iter().position(|n| n == name)
    }

    pub fn opaque_index(&self, name: &str) -> Option<usize> {
        self.opaque.iter().position(|(n, _)| n == name)
    }

    /// True when every independent name is one letter, so jet coordinates
    /// can use the compact `u_xt` spelling.
    pub fn compact_jets(&self) -> bool {
        self.independent.iter().all(|n| n.len() == 1)
    }

    pub fn symbol_name(&self, s: &Symbol) -> String {
        match s {
            Symbol::Indep(i) => self.independent[*i].clone(),
            Symbol::Param(i) => self.params[*i].clone(),
            Symbol::Jet(j) => self.jet_name(j),
        }
    }

    pub fn jet_name(&self, j: &Jet) -> String {
        let base = &self.dependent[j.dep];
        if j.order() == 0 {
            return base.clone();
        }
        let dirs = j.index.directions();
        if self.compact_jets() {
            let suffix: String = dirs.iter().map(|&i| self.independent[i].as_str()).collect();
            format!("{base}_{suffix}")
        } else {
            let names: Vec<&str> = dirs.iter().map(|&i| self.independent[i].as_str()).collect();
            format!("{base}[{}]", names.join(","))
        }
    }

    pub fn contains(&self, s: &Symbol) -> bool {
        match s {
            Symbol::Indep(i) => *i < self.p(),
            Symbol::Param(i) => *i < self.params.len(),
            Symbol::Jet(j) => j.dep < self.q() && j.index.len() == self.p(),
        }
    }

    pub fn check_symbol(&self, s: &Symbol) -> Result<()> {
        if self.contains(s) {
            Ok(())
        } else {
            Err(Error::UndeclaredSymbol(format!("{s:?}")))
        }
    }

    /// Independent variable symbol by name.
    pub fn var(&self, name: &str) -> Result<Symbol> {
        self.independent_index(name)
            .map(Symbol::Indep)
            .ok_or_else(|| Error::UndeclaredSymbol(name.to_string()))
    }

    pub fn param(&self, name: &str) -> Result<Symbol> {
        self.param_index(name)
            .map(Symbol::Param)
            .ok_or_else(|| Error::UndeclaredSymbol(name.to_string()))
    }

    /// Jet coordinate from its spelling, e.g. `u`, `u_xt` or `u[x,x,t]`.
    pub fn jet(&self, spelling: &str) -> Result<Symbol> {
        let (base, dirs): (&str, Vec<&str>) = if let Some((b, rest)) = spelling.split_once('_') {
            (b, rest.split("").filter(|s| !s.is_empty()).collect())
        } else if let Some((b, rest)) = spelling.split_once('[') {
            let inner = rest
                .strip_suffix(']')
                .ok_or_else(|| Error::UndeclaredSymbol(spelling.to_string()))?;
            (b, inner.split(',').map(str::trim).filter(|s| !s.is_empty()).collect())
        } else {
            (spelling, Vec::new())
        };
        let dep = self
            .dependent_index(base)
            .ok_or_else(|| Error::UndeclaredSymbol(base.to_string()))?;
        let mut index = MultiIndex::zero(self.p());
        for d in dirs {
            let i = self
                .independent_index(d)
                .ok_or_else(|| Error::UndeclaredSymbol(d.to_string()))?;
            index = index.plus(i);
        }
        Ok(Symbol::Jet(Jet::new(dep, index)))
    }

    /// Every symbol of jet order at most `order`: variables, parameters and
    /// jet coordinates.
    pub fn symbols_up_to(&self, order: u32) -> Vec<Symbol> {
        let mut out: Vec<Symbol> = (0..self.p()).map(Symbol::Indep).collect();
        out.extend((0..self.params.len()).map(Symbol::Param));
        for dep in 0..self.q() {
            for n in 0..=order {
                for idx in MultiIndex::all_of_order(self.p(), n) {
                    out.push(Symbol::Jet(Jet::new(dep, idx)));
                }
            }
        }
        out
    }

    pub fn names(&self) -> BTreeSet<&str> {
        self.independent
            .iter()
            .chain(&self.dependent)
            .chain(&self.params)
            .map(String::as_str)
            .chain(self.opaque.iter().map(|(n, _)| n.as_str()))
            .collect()
    }
}

impl fmt::Display for JetContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "independent = {}; dependent = {}; order = {}",
            self.independent.join(", "),
            self.dependent.join(", "),
            self.max_order
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multi_indices_of_order() {
        let all = MultiIndex::all_of_order(2, 2);
        assert_eq!(all.len(), 3);
        assert!(all.iter().all(|m| m.order() == 2));
        assert_eq!(MultiIndex::all_of_order(3, 2).len(), 6);
        assert_eq!(MultiIndex::all_of_order(1, 0), vec![MultiIndex::zero(1)]);
    }

    #[test]
    fn mixed_spellings_agree() {
        let ctx = JetContext::new(&["x", "t"], &["u"], 3).unwrap();
        assert_eq!(ctx.jet("u_xt").unwrap(), ctx.jet("u_tx").unwrap());
        assert_eq!(ctx.jet("u[x,t]").unwrap(), ctx.jet("u_tx").unwrap());
        let Symbol::Jet(j) = ctx.jet("u_xxt").unwrap() else { panic!() };
        assert_eq!(ctx.jet_name(&j), "u_xxt");
        assert!(ctx.jet("u_z").is_err());
    }

    #[test]
    fn names_must_be_distinct() {
        assert!(JetContext::new(&["x", "x"], &["u"], 2).is_err());
        assert!(JetContext::new(&["x"], &["x"], 2).is_err());
        assert!(JetContext::new(&[], &["u"], 2).is_err());
        let ctx = JetContext::new(&["x"], &["u"], 2).unwrap();
        assert!(ctx.clone().with_params(&["u"]).is_err());
        assert!(ctx.clone().with_params(&["exp"]).is_err());
        assert!(ctx.with_opaque("F", 0).is_err());
    }

    #[test]
    fn opaque_partials_stay_sorted() {
        let f = Opaque::new(0).differentiated(2).differentiated(0).differentiated(2);
        assert_eq!(f.partials, vec![0, 2, 2]);
    }
}
