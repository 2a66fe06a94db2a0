//! Deterministic printer emitting the same grammar the parser accepts.

use num_rational::Rational64;
use num_traits::{One, Signed};

use super::context::JetContext;
use super::tree::Expr;

const PREC_SUM: u8 = 1;
const PREC_PRODUCT: u8 = 2;
const PREC_POWER: u8 = 4;
const PREC_ATOM: u8 = 5;

pub(crate) fn render(ctx: &JetContext, e: &Expr) -> String {
    let mut out = String::new();
    write_expr(ctx, e, 0, &mut out);
    out
}

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Add(_) => PREC_SUM,
        Expr::Mul(_) => PREC_PRODUCT,
        Expr::Num(c) if c.is_negative() || !c.is_integer() => PREC_PRODUCT,
        Expr::Pow(..) => PREC_POWER,
        _ => PREC_ATOM,
    }
}

/// Splits off a leading negative numeric factor so sums can print `a - b`.
fn negated(e: &Expr) -> Option<Expr> {
    match e {
        Expr::Num(c) if c.is_negative() => Some(Expr::Num(-c)),
        Expr::Mul(xs) => match xs.first() {
            Some(Expr::Num(c)) if c.is_negative() => {
                let c = -c;
                let mut rest: Vec<Expr> = Vec::with_capacity(xs.len());
                if !c.is_one() {
                    rest.push(Expr::Num(c));
                }
                rest.extend(xs[1..].iter().cloned());
                Some(Expr::product(rest))
            }
            _ => None,
        },
        _ => None,
    }
}

fn write_expr(ctx: &JetContext, e: &Expr, min_prec: u8, out: &mut String) {
    let prec = precedence(e);
    let wrap = prec < min_prec;
    if wrap {
        out.push('(');
    }
    match e {
        Expr::Num(c) => {
            out.push_str(&c.numer().to_string());
            if !c.is_integer() {
                out.push('/');
                out.push_str(&c.denom().to_string());
            }
        }
        Expr::Sym(s) => out.push_str(&ctx.symbol_name(s)),
        Expr::Add(xs) => {
            for (i, x) in xs.iter().enumerate() {
                match negated(x) {
                    Some(pos) => {
                        out.push_str(if i == 0 { "-" } else { " - " });
                        write_expr(ctx, &pos, PREC_PRODUCT, out);
                    }
                    None => {
                        if i > 0 {
                            out.push_str(" + ");
                        }
                        write_expr(ctx, x, PREC_SUM + 1, out);
                    }
                }
            }
        }
        Expr::Mul(xs) => {
            if let Some(pos) = negated(e) {
                out.push('-');
                write_expr(ctx, &pos, PREC_PRODUCT, out);
            } else {
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        out.push('*');
                    }
                    // a leading rational coefficient reads unambiguously
                    let need = if i == 0 && matches!(x, Expr::Num(_)) { PREC_PRODUCT } else { PREC_PRODUCT + 1 };
                    write_expr(ctx, x, need, out);
                }
            }
        }
        Expr::Pow(b, r) => {
            if *r == Rational64::new(1, 2) {
                out.push_str("sqrt(");
                write_expr(ctx, b, 0, out);
                out.push(')');
            } else {
                write_expr(ctx, b, PREC_ATOM, out);
                out.push('^');
                if r.is_integer() && r.is_positive() {
                    out.push_str(&r.to_string());
                } else {
                    out.push('(');
                    out.push_str(&r.to_string());
                    out.push(')');
                }
            }
        }
        Expr::Exp(a) => {
            out.push_str("exp(");
            write_expr(ctx, a, 0, out);
            out.push(')');
        }
        Expr::Ln(a) => {
            out.push_str("ln(");
            write_expr(ctx, a, 0, out);
            out.push(')');
        }
        Expr::Apply(head, args) => {
            out.push_str(&ctx.opaque_functions()[head.func].0);
            if !head.partials.is_empty() {
                let slots: Vec<String> = head.partials.iter().map(|s| (s + 1).to_string()).collect();
                out.push('[');
                out.push_str(&slots.join(","));
                out.push(']');
            }
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(ctx, a, 0, out);
            }
            out.push(')');
        }
    }
    if wrap {
        out.push(')');
    }
}
