//! Recursive-descent parser for the expression DSL.
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?          right-associative
//! primary := INT | '(' sum ')' | IDENT | IDENT '(' args ')' | IDENT '[' list ']' ...
//! ```
//!
//! Jet coordinates are written `u`, `u_xt` or `u[x,x,t]`; formal partials of
//! opaque functions are written `F[1,2](a, b)`. There is no implicit
//! multiplication.

use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::ToPrimitive;

use super::context::{Jet, JetContext, MultiIndex, Opaque, Symbol};
use super::tree::Expr;
use crate::error::{Error, Result};

/// Hooks for names the bare expression grammar does not know: references to
/// previously defined expressions, and the total-derivative form `D[x,t](e)`.
pub trait Resolve {
    fn named(&self, _name: &str) -> Option<Expr> {
        None
    }

    fn total_derivative(&self, _e: &Expr, _index: &MultiIndex) -> Option<Result<Expr>> {
        None
    }
}

/// Resolver that knows nothing beyond the context.
pub struct NoResolve;

impl Resolve for NoResolve {}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(BigInt),
    Ident { name: String, suffix: Option<String> },
    Op(char),
    End,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    column: usize,
}

fn lex(text: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let column = i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let digits: String = chars[start..i].iter().collect();
            out.push(Token {
                tok: Tok::Int(digits.parse().expect("digits")),
                column,
            });
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                i += 1;
            }
            let name: String = chars[start..i].iter().collect();
            let mut suffix = None;
            if i < chars.len() && chars[i] == '_' {
                i += 1;
                let s = i;
                while i < chars.len() && chars[i].is_ascii_alphabetic() {
                    i += 1;
                }
                if s == i {
                    return Err(Error::Syntax {
                        column: s + 1,
                        message: "expected derivative letters after `_`".into(),
                    });
                }
                suffix = Some(chars[s..i].iter().collect());
            }
            out.push(Token {
                tok: Tok::Ident { name, suffix },
                column,
            });
        } else if "+-*/^()[],".contains(c) {
            out.push(Token { tok: Tok::Op(c), column });
            i += 1;
        } else {
            return Err(Error::Syntax {
                column,
                message: format!("unexpected character `{c}`"),
            });
        }
    }
    out.push(Token {
        tok: Tok::End,
        column: chars.len() + 1,
    });
    Ok(out)
}

struct Parser<'a, R: Resolve + ?Sized> {
    tokens: Vec<Token>,
    pos: usize,
    ctx: &'a JetContext,
    resolver: &'a R,
}

/// Parses `text` under `ctx`. The result is the raw tree; call
/// [`Expr::normalize`] for the canonical form.
pub fn parse(text: &str, ctx: &JetContext) -> Result<Expr> {
    parse_with(text, ctx, &NoResolve)
}

pub fn parse_with<R: Resolve + ?Sized>(text: &str, ctx: &JetContext, resolver: &R) -> Result<Expr> {
    let mut p = Parser {
        tokens: lex(text)?,
        pos: 0,
        ctx,
        resolver,
    };
    let e = p.sum()?;
    match &p.peek().tok {
        Tok::End => Ok(e),
        _ => Err(p.error("unexpected trailing input")),
    }
}

impl<R: Resolve + ?Sized> Parser<'_, R> {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, message: &str) -> Error {
        Error::Syntax {
            column: self.peek().column,
            message: message.to_string(),
        }
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek().tok == Tok::Op(c) {
            self.next();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(&format!("expected `{c}`")))
        }
    }

    fn sum(&mut self) -> Result<Expr> {
        let mut terms = vec![self.product()?];
        loop {
            if self.eat('+') {
                terms.push(self.product()?);
            } else if self.eat('-') {
                terms.push(-self.product()?);
            } else {
                break;
            }
        }
        Ok(Expr::sum(terms))
    }

    fn product(&mut self) -> Result<Expr> {
        let mut factors = vec![self.unary()?];
        loop {
            if self.eat('*') {
                factors.push(self.unary()?);
            } else if self.eat('/') {
                factors.push(self.unary()?.recip());
            } else {
                break;
            }
        }
        Ok(Expr::product(factors))
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat('-') {
            return Ok(-self.unary()?);
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if !self.eat('^') {
            return Ok(base);
        }
        let column = self.peek().column;
        let exponent = self.unary()?;
        let r = exponent
            .as_rational()
            .and_then(|r| Some(Rational64::new(r.numer().to_i64()?, r.denom().to_i64()?)))
            .ok_or(Error::Syntax {
                column,
                message: "exponent must be a rational constant".into(),
            })?;
        Ok(base.pow(r))
    }

    fn primary(&mut self) -> Result<Expr> {
        let tok = self.next();
        match tok.tok {
            Tok::Int(n) => Ok(Expr::Num(BigRational::from_integer(n))),
            Tok::Op('(') => {
                let e = self.sum()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident { name, suffix } => self.identifier(name, suffix, tok.column),
            Tok::End => Err(Error::Syntax {
                column: tok.column,
                message: "unexpected end of input".into(),
            }),
            Tok::Op(c) => Err(Error::Syntax {
                column: tok.column,
                message: format!("unexpected `{c}`"),
            }),
        }
    }

    fn args(&mut self) -> Result<Vec<Expr>> {
        self.expect('(')?;
        let mut args = vec![self.sum()?];
        while self.eat(',') {
            args.push(self.sum()?);
        }
        self.expect(')')?;
        Ok(args)
    }

    fn bracket_names(&mut self) -> Result<Vec<(String, usize)>> {
        let mut out = Vec::new();
        loop {
            let t = self.next();
            match t.tok {
                Tok::Ident { name, suffix: None } => out.push((name, t.column)),
                Tok::Int(n) => out.push((n.to_string(), t.column)),
                _ => {
                    return Err(Error::Syntax {
                        column: t.column,
                        message: "expected a name in brackets".into(),
                    })
                }
            }
            if self.eat(']') {
                return Ok(out);
            }
            self.expect(',')?;
        }
    }

    fn index_from_names(&self, names: &[(String, usize)]) -> Result<MultiIndex> {
        let mut index = MultiIndex::zero(self.ctx.p());
        for (n, column) in names {
            let i = self.ctx.independent_index(n).ok_or_else(|| Error::UnknownIdentifier {
                name: n.clone(),
                column: *column,
            })?;
            index = index.plus(i);
        }
        Ok(index)
    }

    fn jet(&self, dep: usize, index: MultiIndex, column: usize) -> Result<Expr> {
        let order = index.order();
        if order > self.ctx.max_order() {
            return Err(Error::Syntax {
                column,
                message: format!("jet order {order} exceeds the context maximum {}", self.ctx.max_order()),
            });
        }
        Ok(Expr::jet(Jet::new(dep, index)))
    }

    fn identifier(&mut self, name: String, suffix: Option<String>, column: usize) -> Result<Expr> {
        let ctx = self.ctx;
        if let Some(suffix) = suffix {
            let dep = ctx.dependent_index(&name).ok_or_else(|| Error::UnknownIdentifier {
                name: name.clone(),
                column,
            })?;
            let mut index = MultiIndex::zero(ctx.p());
            for (k, ch) in suffix.chars().enumerate() {
                let letter = ch.to_string();
                let i = ctx.independent_index(&letter).ok_or_else(|| Error::UnknownIdentifier {
                    name: letter,
                    column: column + name.len() + 1 + k,
                })?;
                index = index.plus(i);
            }
            return self.jet(dep, index, column);
        }
        match name.as_str() {
            "exp" | "ln" | "sqrt" => {
                let args = self.args()?;
                if args.len() != 1 {
                    return Err(Error::Arity {
                        name,
                        expected: 1,
                        found: args.len(),
                    });
                }
                let a = &args[0];
                return Ok(match name.as_str() {
                    "exp" => a.exp(),
                    "ln" => a.ln(),
                    _ => a.sqrt(),
                });
            }
            "D" if self.peek().tok == Tok::Op('[') => {
                self.next();
                let names = self.bracket_names()?;
                let index = self.index_from_names(&names)?;
                let args = self.args()?;
                if args.len() != 1 {
                    return Err(Error::Arity {
                        name,
                        expected: 1,
                        found: args.len(),
                    });
                }
                return match self.resolver.total_derivative(&args[0], &index) {
                    Some(r) => r,
                    None => Err(Error::Syntax {
                        column,
                        message: "total derivatives are not available here".into(),
                    }),
                };
            }
            _ => {}
        }
        if let Some(i) = ctx.independent_index(&name) {
            return Ok(Expr::sym(Symbol::Indep(i)));
        }
        if let Some(i) = ctx.param_index(&name) {
            return Ok(Expr::sym(Symbol::Param(i)));
        }
        if let Some(dep) = ctx.dependent_index(&name) {
            if self.eat('[') {
                let names = self.bracket_names()?;
                let index = self.index_from_names(&names)?;
                return self.jet(dep, index, column);
            }
            return Ok(Expr::jet(Jet::new(dep, MultiIndex::zero(ctx.p()))));
        }
        if let Some(f) = ctx.opaque_index(&name) {
            let arity = ctx.opaque_functions()[f].1;
            let mut head = Opaque::new(f);
            if self.eat('[') {
                for (slot, col) in self.bracket_names()? {
                    let k: usize = slot.parse().ok().filter(|k| (1..=arity).contains(k)).ok_or(Error::Syntax {
                        column: col,
                        message: format!("partial slot must be in 1..={arity}"),
                    })?;
                    head = head.differentiated(k - 1);
                }
            }
            let args = self.args()?;
            if args.len() != arity {
                return Err(Error::Arity {
                    name,
                    expected: arity,
                    found: args.len(),
                });
            }
            return Ok(Expr::apply(head, args));
        }
        if let Some(e) = self.resolver.named(&name) {
            return Ok(e);
        }
        Err(Error::UnknownIdentifier { name, column })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> JetContext {
        JetContext::new(&["x", "t"], &["u"], 3)
            .unwrap()
            .with_params(&["lambda"])
            .unwrap()
            .with_opaque("F", 3)
            .unwrap()
    }

    #[test]
    fn square_is_power() {
        let c = ctx();
        let e = parse("x^2", &c).unwrap();
        assert_eq!(e.normalize(), parse("x*x", &c).unwrap().normalize());
        assert_eq!(c.display(&e.normalize()), "x^2");
    }

    #[test]
    fn precedence_rules() {
        let c = ctx();
        // unary minus binds looser than ^
        assert_eq!(parse("-x^2", &c).unwrap().normalize(), parse("-(x^2)", &c).unwrap().normalize());
        // ^ is right-associative
        assert_eq!(parse("x^2^3", &c).unwrap().normalize(), parse("x^8", &c).unwrap().normalize());
        assert_eq!(parse("x^-1*x", &c).unwrap().normalize(), Expr::one());
        assert_eq!(parse("1 - 2 - 3", &c).unwrap().normalize(), Expr::int(-4));
        assert_eq!(parse("12/4/3", &c).unwrap().normalize(), Expr::one());
    }

    #[test]
    fn olver_equation_parses() {
        let c = JetContext::new(&["x"], &["u"], 3).unwrap();
        let e = parse("u_xx - (1+2*x)*exp(u) - (x+x^2)*u_x*exp(u)", &c).unwrap();
        assert_eq!(e.jet_order(), 2);
    }

    #[test]
    fn opaque_application() {
        let c = JetContext::new(&["x"], &["u"], 3).unwrap().with_opaque("F", 3).unwrap();
        let e = parse("F(u_xx, u_x - x*u_xx, u + (1/2)*x^2*u_xx - x*u_x)", &c).unwrap();
        assert!(matches!(e, Expr::Apply(..)));
        assert!(matches!(parse("F(u, u)", &c), Err(Error::Arity { expected: 3, found: 2, .. })));
        assert!(parse("F[4](u, u, u)", &c).is_err());
    }

    #[test]
    fn errors_carry_positions() {
        let c = ctx();
        match parse("x + u_z", &c) {
            Err(Error::UnknownIdentifier { name, column }) => {
                assert_eq!(name, "z");
                assert_eq!(column, 7);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse("x + * 2", &c), Err(Error::Syntax { column: 5, .. })));
        assert!(matches!(parse("u_xxxx", &c), Err(Error::Syntax { .. })));
        assert!(matches!(parse("x^t", &c), Err(Error::Syntax { .. })));
        assert!(matches!(parse("2 x", &c), Err(Error::Syntax { .. })));
        assert!(matches!(parse("y", &c), Err(Error::UnknownIdentifier { .. })));
        assert!(matches!(parse("D[x](u)", &c), Err(Error::Syntax { .. })));
    }

    #[test]
    fn mixed_partials_commute() {
        let c = ctx();
        assert_eq!(parse("u_xt - u_tx", &c).unwrap().normalize(), Expr::zero());
        assert_eq!(parse("u[x,t,x] - u_xxt", &c).unwrap().normalize(), Expr::zero());
    }
}
