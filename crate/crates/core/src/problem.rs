//! Problem files: a jet context plus named expressions, vector fields,
//! one-forms, equations and Lagrangians.
//!
//! ```text
//! # comment
//! context: independent = x, t; dependent = u; order = 4
//! param: lambda, tau
//! opaque: F(3)
//! expr Q: u - x^2*u_x - t*u_t
//! vectorfield X: xi[x] = x^2; xi[t] = t; phi[u] = u
//! oneform mu: lambda * dx + tau * dt
//! equation E: u_xx - u ; solve_for = u_xx
//! lagrangian L: (1/2)*u_x^2
//! ```
//!
//! Every block is one logical line; a line starting with whitespace
//! continues the previous one. Definitions may refer to earlier `expr` and
//! `lagrangian` names and may use `D[x,t](e)` for total derivatives.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::expr::canon::Poly;
use crate::expr::{parse_with, partial_poly, Expr, JetContext, MultiIndex, Resolve, Symbol, RESERVED};
use crate::jet::total_derivative_multi;
use crate::symmetry::{Equation, HorizontalOneForm, VectorField};
use crate::variational::Lagrangian;

#[derive(Debug, Clone, PartialEq)]
pub enum Definition {
    Expr(Expr),
    VectorField(VectorField),
    OneForm(HorizontalOneForm),
    Equation(Equation),
    Lagrangian(Lagrangian),
}

impl Definition {
    fn kind(&self) -> &'static str {
        match self {
            Definition::Expr(_) => "expression",
            Definition::VectorField(_) => "vector field",
            Definition::OneForm(_) => "one-form",
            Definition::Equation(_) => "equation",
            Definition::Lagrangian(_) => "lagrangian",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemFile {
    pub ctx: JetContext,
    /// Comment lines before the first block, kept on serialization.
    pub header: Vec<String>,
    pub definitions: Vec<(String, Definition)>,
}

/// One logical line: the joined text plus, for each physical piece, its
/// offset in the joined text, line number and starting column.
struct Logical {
    text: String,
    pieces: Vec<(usize, usize, usize)>,
}

impl Logical {
    fn locate(&self, offset: usize) -> (usize, usize) {
        let (start, line, col) = self
            .pieces
            .iter()
            .rev()
            .find(|(start, _, _)| *start <= offset)
            .copied()
            .unwrap_or(self.pieces[0]);
        (line, col + (offset - start))
    }

    fn error(&self, offset: usize, message: impl Into<String>) -> Error {
        let (line, column) = self.locate(offset);
        Error::Problem {
            line,
            column,
            message: message.into(),
        }
    }
}

fn logical_lines(text: &str) -> (Vec<String>, Vec<Logical>) {
    let mut header = Vec::new();
    let mut out: Vec<Logical> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let body = match raw.find('#') {
            Some(k) => &raw[..k],
            None => raw,
        };
        if body.trim().is_empty() {
            if out.is_empty() {
                if let Some(k) = raw.find('#') {
                    header.push(raw[k + 1..].trim().to_string());
                }
            }
            continue;
        }
        let leading = body.len() - body.trim_start().len();
        let trimmed = body.trim();
        if leading > 0 {
            if let Some(last) = out.last_mut() {
                last.text.push(' ');
                last.pieces.push((last.text.len(), line_no, leading + 1));
                last.text.push_str(trimmed);
                continue;
            }
        }
        out.push(Logical {
            text: trimmed.to_string(),
            pieces: vec![(0, line_no, leading + 1)],
        });
    }
    (header, out)
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic()) && chars.all(|c| c.is_ascii_alphanumeric())
}

struct Scope<'a> {
    ctx: &'a JetContext,
    names: &'a BTreeMap<String, Expr>,
}

impl Resolve for Scope<'_> {
    fn named(&self, name: &str) -> Option<Expr> {
        self.names.get(name).cloned()
    }

    fn total_derivative(&self, e: &Expr, index: &MultiIndex) -> Option<Result<Expr>> {
        Some(total_derivative_multi(self.ctx, e, index))
    }
}

/// Splits `text` on `sep`, returning each trimmed piece with its offset.
fn split_offsets(text: &str, sep: char, base: usize) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = 0;
    for (k, c) in text.char_indices().chain(std::iter::once((text.len(), sep))) {
        if c == sep {
            let piece = &text[start..k];
            let lead = piece.len() - piece.trim_start().len();
            out.push((base + start + lead, piece.trim()));
            start = k + c.len_utf8();
        }
    }
    out
}

struct Loader {
    ctx: Option<JetContext>,
    names: BTreeMap<String, Expr>,
    defined: BTreeMap<String, ()>,
    definitions: Vec<(String, Definition)>,
}

impl Loader {
    fn parse_expr(&self, line: &Logical, offset: usize, text: &str) -> Result<Expr> {
        let ctx = self.ctx.as_ref().expect("context checked");
        self.parse_in(ctx, line, offset, text)
    }

    fn parse_in(&self, ctx: &JetContext, line: &Logical, offset: usize, text: &str) -> Result<Expr> {
        let scope = Scope { ctx, names: &self.names };
        parse_with(text, ctx, &scope).map(|e| e.normalize()).map_err(|e| {
            let column = match &e {
                Error::Syntax { column, .. } | Error::UnknownIdentifier { column, .. } => *column,
                _ => 1,
            };
            line.error(offset + column - 1, e.to_string())
        })
    }

    fn context(&mut self, line: &Logical, offset: usize, rest: &str) -> Result<()> {
        if self.ctx.is_some() {
            return Err(line.error(0, "duplicate context block"));
        }
        let mut independent = Vec::new();
        let mut dependent = Vec::new();
        let mut order = None;
        for (off, item) in split_offsets(rest, ';', offset) {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| line.error(off, format!("expected `key = value`, found `{item}`")))?;
            let list = || -> Vec<String> { value.split(',').map(|s| s.trim().to_string()).collect() };
            match key.trim() {
                "independent" => independent = list(),
                "dependent" => dependent = list(),
                "order" => {
                    order = Some(
                        value
                            .trim()
                            .parse::<u32>()
                            .map_err(|_| line.error(off, format!("invalid order `{}`", value.trim())))?,
                    )
                }
                other => return Err(line.error(off, format!("unknown context key `{other}`"))),
            }
        }
        let order = order.ok_or_else(|| line.error(offset, "context needs `order = K`"))?;
        let ind: Vec<&str> = independent.iter().map(String::as_str).collect();
        let dep: Vec<&str> = dependent.iter().map(String::as_str).collect();
        let ctx = JetContext::new(&ind, &dep, order).map_err(|e| line.error(offset, e.to_string()))?;
        self.ctx = Some(ctx);
        Ok(())
    }

    fn declare(&mut self, line: &Logical, name: &str, def: Definition) -> Result<()> {
        if let Definition::Expr(e) = &def {
            self.names.insert(name.to_string(), e.clone());
        }
        if let Definition::Lagrangian(l) = &def {
            self.names.insert(name.to_string(), l.density.clone());
        }
        self.defined.insert(name.to_string(), ());
        self.definitions.push((name.to_string(), def));
        let _ = line;
        Ok(())
    }

    fn check_name(&self, line: &Logical, offset: usize, name: &str) -> Result<()> {
        let ctx = self.ctx.as_ref().expect("context checked");
        if !is_identifier(name) {
            return Err(line.error(offset, format!("invalid name `{name}`")));
        }
        if self.defined.contains_key(name) {
            return Err(line.error(offset, format!("duplicate definition of `{name}`")));
        }
        if ctx.names().contains(name) || RESERVED.contains(&name) {
            return Err(line.error(offset, format!("`{name}` is already a name of the context")));
        }
        Ok(())
    }

    fn vector_field(&self, line: &Logical, offset: usize, rest: &str) -> Result<VectorField> {
        let ctx = self.ctx.as_ref().unwrap();
        let mut xi = vec![Expr::zero(); ctx.p()];
        let mut phi = vec![Expr::zero(); ctx.q()];
        let mut seen = BTreeMap::new();
        for (off, item) in split_offsets(rest, ';', offset) {
            if item.is_empty() {
                continue;
            }
            let (lhs, value) = item
                .split_once('=')
                .ok_or_else(|| line.error(off, format!("expected `xi[..] = ..` or `phi[..] = ..`, found `{item}`")))?;
            let lhs = lhs.trim();
            let value_off = off + item.find('=').unwrap() + 1;
            let value_off = value_off + (value.len() - value.trim_start().len());
            let (kind, var) = lhs
                .strip_suffix(']')
                .and_then(|s| s.split_once('['))
                .ok_or_else(|| line.error(off, format!("invalid component `{lhs}`")))?;
            let slot = match kind.trim() {
                "xi" => ctx.independent_index(var.trim()).map(|i| (true, i)),
                "phi" => ctx.dependent_index(var.trim()).map(|i| (false, i)),
                _ => None,
            }
            .ok_or_else(|| line.error(off, format!("unknown component `{lhs}`")))?;
            if seen.insert(slot, ()).is_some() {
                return Err(line.error(off, format!("component `{lhs}` given twice")));
            }
            let e = self.parse_expr(line, value_off, value.trim())?;
            if slot.0 {
                xi[slot.1] = e;
            } else {
                phi[slot.1] = e;
            }
        }
        VectorField::new(ctx, xi, phi).map_err(|e| line.error(offset, e.to_string()))
    }

    fn one_form(&self, line: &Logical, offset: usize, rest: &str) -> Result<HorizontalOneForm> {
        let ctx = self.ctx.as_ref().unwrap();
        let differentials: Vec<String> = ctx.independent_names().iter().map(|n| format!("d{n}")).collect();
        for d in &differentials {
            if ctx.names().contains(d.as_str()) || self.names.contains_key(d) {
                return Err(line.error(offset, format!("`{d}` is taken, cannot read a one-form")));
            }
        }
        let names: Vec<&str> = differentials.iter().map(String::as_str).collect();
        let extended = ctx.clone().with_params(&names).map_err(|e| line.error(offset, e.to_string()))?;
        let e = Poly::from_expr(&self.parse_in(&extended, line, offset, rest)?);
        let first = ctx.param_names().len();
        let ds: Vec<Symbol> = (0..ctx.p()).map(|i| Symbol::Param(first + i)).collect();
        let mut lambda = Vec::with_capacity(ctx.p());
        let mut rest_poly = e.clone();
        for d in &ds {
            let c = partial_poly(&e, d);
            if c.symbols().iter().any(|s| ds.contains(s)) {
                return Err(line.error(offset, "one-form is not linear in the differentials"));
            }
            rest_poly = rest_poly.sub(&c.mul(&Poly::symbol(d.clone())));
            lambda.push(c.to_expr());
        }
        if !rest_poly.is_zero() {
            return Err(line.error(offset, "one-form has a term without a differential"));
        }
        HorizontalOneForm::new(ctx, lambda).map_err(|e| line.error(offset, e.to_string()))
    }

    fn equation(&self, line: &Logical, offset: usize, rest: &str) -> Result<Equation> {
        let ctx = self.ctx.as_ref().unwrap();
        let (lhs_text, solve) = rest
            .rsplit_once(';')
            .ok_or_else(|| line.error(offset, "equation needs `; solve_for = JET`"))?;
        let solve_off = offset + lhs_text.len() + 1;
        let (key, jet) = solve
            .split_once('=')
            .filter(|(k, _)| k.trim() == "solve_for")
            .ok_or_else(|| line.error(solve_off, "expected `solve_for = JET`"))?;
        let _ = key;
        let lhs = self.parse_expr(line, offset, lhs_text.trim_end())?;
        Equation::solve_for_named(ctx, &lhs, jet.trim()).map_err(|e| line.error(solve_off, e.to_string()))
    }

    fn block(&mut self, line: &Logical) -> Result<()> {
        let text = &line.text;
        let colon = text
            .find(':')
            .ok_or_else(|| line.error(0, "expected `KEYWORD: ...` or `KEYWORD NAME: ...`"))?;
        let head = &text[..colon];
        let body_raw = &text[colon + 1..];
        let body_off = colon + 1 + (body_raw.len() - body_raw.trim_start().len());
        let body = body_raw.trim();
        let mut words = head.split_whitespace();
        let keyword = words.next().unwrap_or("");
        let name = words.next();
        if words.next().is_some() {
            return Err(line.error(0, format!("malformed block header `{head}`")));
        }
        if keyword == "context" {
            return self.context(line, body_off, body);
        }
        if self.ctx.is_none() {
            return Err(line.error(0, "missing context"));
        }
        match (keyword, name) {
            ("param", None) => {
                let names: Vec<&str> = body.split(',').map(str::trim).collect();
                let ctx = self.ctx.take().unwrap();
                let extended = ctx.clone().with_params(&names);
                self.ctx = Some(ctx);
                self.ctx = Some(extended.map_err(|e| line.error(body_off, e.to_string()))?);
                Ok(())
            }
            ("opaque", None) => {
                for (off, item) in split_offsets(body, ',', body_off) {
                    let (fname, arity) = item
                        .strip_suffix(')')
                        .and_then(|s| s.split_once('('))
                        .ok_or_else(|| line.error(off, format!("expected `NAME(ARITY)`, found `{item}`")))?;
                    let arity: usize = arity
                        .trim()
                        .parse()
                        .map_err(|_| line.error(off, format!("invalid arity `{}`", arity.trim())))?;
                    let ctx = self.ctx.take().unwrap();
                    let extended = ctx.clone().with_opaque(fname.trim(), arity);
                    self.ctx = Some(ctx);
                    self.ctx = Some(extended.map_err(|e| line.error(off, e.to_string()))?);
                }
                Ok(())
            }
            (kind, Some(name)) => {
                let name_off = head.find(name).unwrap_or(0);
                self.check_name(line, name_off, name)?;
                let def = match kind {
                    "expr" => Definition::Expr(self.parse_expr(line, body_off, body)?),
                    "vectorfield" => Definition::VectorField(self.vector_field(line, body_off, body)?),
                    "oneform" => Definition::OneForm(self.one_form(line, body_off, body)?),
                    "equation" => Definition::Equation(self.equation(line, body_off, body)?),
                    "lagrangian" => {
                        let ctx = self.ctx.as_ref().unwrap();
                        let e = self.parse_expr(line, body_off, body)?;
                        Definition::Lagrangian(Lagrangian::new(ctx, e).map_err(|e| line.error(body_off, e.to_string()))?)
                    }
                    other => return Err(line.error(0, format!("unknown block `{other}`"))),
                };
                self.declare(line, name, def)
            }
            (other, None) => Err(line.error(0, format!("unknown block `{other}` (or missing name)"))),
        }
    }
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<ProblemFile> {
        let (header, lines) = logical_lines(text);
        let mut loader = Loader {
            ctx: None,
            names: BTreeMap::new(),
            defined: BTreeMap::new(),
            definitions: Vec::new(),
        };
        for line in &lines {
            loader.block(line)?;
        }
        let ctx = loader.ctx.ok_or(Error::Problem {
            line: 1,
            column: 1,
            message: "missing context".into(),
        })?;
        Ok(ProblemFile {
            ctx,
            header,
            definitions: loader.definitions,
        })
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<ProblemFile> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        ProblemFile::parse(&text)
    }

    pub fn get(&self, name: &str) -> Option<&Definition> {
        self.definitions.iter().find(|(n, _)| n == name).map(|(_, d)| d)
    }

    fn lookup<'a, T>(&'a self, name: &str, kind: &str, pick: impl Fn(&'a Definition) -> Option<&'a T>) -> Result<&'a T> {
        match self.get(name) {
            Some(d) => pick(d).ok_or_else(|| Error::UndeclaredSymbol(format!("`{name}` is a {}, not a {kind}", d.kind()))),
            None => Err(Error::UndeclaredSymbol(format!("no {kind} named `{name}`"))),
        }
    }

    pub fn expr(&self, name: &str) -> Result<&Expr> {
        self.lookup(name, "expression", |d| match d {
            Definition::Expr(e) => Some(e),
            _ => None,
        })
    }

    pub fn field(&self, name: &str) -> Result<&VectorField> {
        self.lookup(name, "vector field", |d| match d {
            Definition::VectorField(e) => Some(e),
            _ => None,
        })
    }

    pub fn one_form(&self, name: &str) -> Result<&HorizontalOneForm> {
        self.lookup(name, "one-form", |d| match d {
            Definition::OneForm(e) => Some(e),
            _ => None,
        })
    }

    pub fn equation(&self, name: &str) -> Result<&Equation> {
        self.lookup(name, "equation", |d| match d {
            Definition::Equation(e) => Some(e),
            _ => None,
        })
    }

    pub fn lagrangian(&self, name: &str) -> Result<&Lagrangian> {
        self.lookup(name, "lagrangian", |d| match d {
            Definition::Lagrangian(e) => Some(e),
            _ => None,
        })
    }

    /// Names of all definitions of one kind, in file order.
    pub fn names_of(&self, kind: fn(&Definition) -> bool) -> Vec<&str> {
        self.definitions
            .iter()
            .filter(|(_, d)| kind(d))
            .map(|(n, _)| n.as_str())
            .collect()
    }

    /// Canonical text: every definition fully expanded and normalized.
    pub fn serialize(&self) -> String {
        let ctx = &self.ctx;
        let mut out = String::new();
        for h in &self.header {
            let _ = writeln!(out, "# {h}");
        }
        let _ = writeln!(
            out,
            "context: independent = {}; dependent = {}; order = {}",
            ctx.independent_names().join(", "),
            ctx.dependent_names().join(", "),
            ctx.max_order()
        );
        if !ctx.param_names().is_empty() {
            let _ = writeln!(out, "param: {}", ctx.param_names().join(", "));
        }
        if !ctx.opaque_functions().is_empty() {
            let items: Vec<String> = ctx.opaque_functions().iter().map(|(n, a)| format!("{n}({a})")).collect();
            let _ = writeln!(out, "opaque: {}", items.join(", "));
        }
        let d = |e: &Expr| ctx.display(e);
        for (name, def) in &self.definitions {
            let _ = match def {
                Definition::Expr(e) => writeln!(out, "expr {name}: {}", d(e)),
                Definition::VectorField(f) => {
                    let mut parts = Vec::new();
                    for (n, e) in ctx.independent_names().iter().zip(&f.xi) {
                        parts.push(format!("xi[{n}] = {}", d(e)));
                    }
                    for (n, e) in ctx.dependent_names().iter().zip(&f.phi) {
                        parts.push(format!("phi[{n}] = {}", d(e)));
                    }
                    writeln!(out, "vectorfield {name}: {}", parts.join("; "))
                }
                Definition::OneForm(f) => {
                    let parts: Vec<String> = ctx
                        .independent_names()
                        .iter()
                        .zip(&f.lambda)
                        .map(|(n, e)| format!("({}) * d{n}", d(e)))
                        .collect();
                    writeln!(out, "oneform {name}: {}", parts.join(" + "))
                }
                Definition::Equation(eq) => writeln!(
                    out,
                    "equation {name}: {} ; solve_for = {}",
                    d(&eq.lhs),
                    ctx.jet_name(&eq.leading)
                ),
                Definition::Lagrangian(l) => writeln!(out, "lagrangian {name}: {}", d(&l.density)),
            };
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# header line
context: independent = x, t; dependent = u; order = 3
param: lambda, tau
expr Q: u - x^2*u_x - t*u_t
expr DQ: D[t](Q)
vectorfield X: xi[x] = x^2; xi[t] = t; phi[u] = u
oneform mu: lambda * dx + tau * dt
equation E: u_xx - u ; solve_for = u_xx
lagrangian L: (1/2)*u_x^2
  + (1/2)*u_t^2   # continuation
";

    #[test]
    fn loads_all_block_kinds() {
        let f = ProblemFile::parse(SAMPLE).unwrap();
        let c = &f.ctx;
        assert_eq!(f.header, vec!["header line".to_string()]);
        assert_eq!(*f.expr("DQ").unwrap(), c.expr("-x^2*u_xt - t*u_tt").unwrap());
        assert_eq!(f.field("X").unwrap().xi[0], c.expr("x^2").unwrap());
        assert_eq!(f.one_form("mu").unwrap().lambda[1], c.expr("tau").unwrap());
        assert_eq!(f.equation("E").unwrap().rhs, c.expr("u").unwrap());
        assert_eq!(f.lagrangian("L").unwrap().density, c.expr("(1/2)*(u_x^2 + u_t^2)").unwrap());
        assert!(f.field("Q").is_err());
    }

    #[test]
    fn serialization_is_idempotent() {
        let f = ProblemFile::parse(SAMPLE).unwrap();
        let once = f.serialize();
        let g = ProblemFile::parse(&once).unwrap();
        assert_eq!(g.serialize(), once);
        assert_eq!(g.definitions, f.definitions);
    }

    #[test]
    fn errors() {
        match ProblemFile::parse("") {
            Err(Error::Problem { message, .. }) => assert_eq!(message, "missing context"),
            other => panic!("{other:?}"),
        }
        match ProblemFile::parse("context: independent = x; dependent = u; order = 2\nexpr a: x + u_z\n") {
            Err(Error::Problem { line, column, message }) => {
                assert_eq!((line, column), (2, 15));
                assert!(message.contains("`z`"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        let dup = "context: independent = x; dependent = u; order = 2\nexpr a: x\nexpr a: u\n";
        assert!(ProblemFile::parse(dup).is_err());
        let undefined = "context: independent = x; dependent = u; order = 2\nexpr a: b + 1\n";
        assert!(ProblemFile::parse(undefined).is_err());
        let before = "expr a: x\ncontext: independent = x; dependent = u; order = 2\n";
        assert!(matches!(ProblemFile::parse(before), Err(Error::Problem { ref message, .. }) if message == "missing context"));
        let twice = "context: independent = x; dependent = u; order = 2\ncontext: independent = x; dependent = u; order = 2\n";
        assert!(ProblemFile::parse(twice).is_err());
    }

    #[test]
    fn one_form_must_be_linear() {
        let base = "context: independent = x, t; dependent = u; order = 2\n";
        assert!(ProblemFile::parse(&format!("{base}oneform m: u * dx + 1\n")).is_err());
        assert!(ProblemFile::parse(&format!("{base}oneform m: dx*dt\n")).is_err());
        let f = ProblemFile::parse(&format!("{base}oneform m: u_t * dx\n")).unwrap();
        assert_eq!(f.one_form("m").unwrap().lambda[1], Expr::zero());
    }
}
