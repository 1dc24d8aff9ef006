//! Canonical concrete syntax. `parse(print(p)) == p` for every policy.

use super::ast::{Expr, Policy, Predicate, UnaryOp};
use crate::dim::Dimension;
use super::types::{Param, Value};

fn num(v: f64) -> String {
    format!("{v:?}")
}

fn expr_prec(e: &Expr) -> u8 {
    match e {
        Expr::Binary { op, .. } => op.precedence().unwrap_or(4),
        _ => 4,
    }
}

fn write_expr(e: &Expr, out: &mut String) {
    match e {
        Expr::Input { name, .. } => out.push_str(name),
        Expr::Const { value, ty } => {
            let d = ty.dim().unwrap_or(Dimension::DIMENSIONLESS);
            match value {
                Value::Scalar(v) => out.push_str(&format!("{} {d}", num(*v))),
                Value::Vector([x, y]) => {
                    out.push_str(&format!("vec({}, {}) {d}", num(*x), num(*y)))
                }
                Value::Bool(b) => out.push_str(&format!("{b}")),
            }
        }
        Expr::Blank(ty) => out.push_str(&format!("?expr({ty})")),
        Expr::Unary { op, arg } => match op {
            UnaryOp::Vx | UnaryOp::Vy => {
                if expr_prec(arg) < 4 {
                    out.push('(');
                    write_expr(arg, out);
                    out.push(')');
                } else {
                    write_expr(arg, out);
                }
                out.push('.');
                out.push_str(op.name());
            }
            _ => {
                out.push_str(op.name());
                out.push('(');
                write_expr(arg, out);
                out.push(')');
            }
        },
        Expr::Binary { op, lhs, rhs } => match op.precedence() {
            Some(p) => {
                let wrap = |child: &Expr, need: u8, out: &mut String| {
                    if expr_prec(child) < need {
                        out.push('(');
                        write_expr(child, out);
                        out.push(')');
                    } else {
                        write_expr(child, out);
                    }
                };
                wrap(lhs, p, out);
                out.push_str(&format!(" {} ", op.name()));
                // Right operand needs strictly higher precedence (left associativity).
                wrap(rhs, p + 1, out);
            }
            None => {
                out.push_str(op.name());
                out.push('(');
                write_expr(lhs, out);
                out.push_str(", ");
                write_expr(rhs, out);
                out.push(')');
            }
        },
    }
}

pub fn print_param(p: &Param) -> String {
    match p.value {
        Some(v) => format!("{} {} = {}", p.name, p.dim, num(v)),
        None => format!("?{} {}", p.name, p.dim),
    }
}

pub fn print_expr(e: &Expr) -> String {
    let mut s = String::new();
    write_expr(e, &mut s);
    s
}

fn pred_prec(p: &Predicate) -> u8 {
    match p {
        Predicate::Or(..) => 1,
        Predicate::And(..) => 2,
        _ => 3,
    }
}

fn write_pred(p: &Predicate, out: &mut String) {
    let wrap = |child: &Predicate, need: u8, out: &mut String| {
        if pred_prec(child) < need {
            out.push('(');
            write_pred(child, out);
            out.push(')');
        } else {
            write_pred(child, out);
        }
    };
    match p {
        Predicate::True => out.push_str("true"),
        Predicate::False => out.push_str("false"),
        Predicate::Blank => out.push_str("?pred"),
        Predicate::ActionEq(a) => out.push_str(&format!("start == {a}")),
        Predicate::Cmp { rel, expr, param } => {
            write_expr(expr, out);
            out.push_str(&format!(" {} ", rel.symbol()));
            out.push_str(&print_param(param));
        }
        Predicate::And(a, b) => {
            wrap(a, 2, out);
            out.push_str(" && ");
            wrap(b, 3, out);
        }
        Predicate::Or(a, b) => {
            wrap(a, 1, out);
            out.push_str(" || ");
            wrap(b, 2, out);
        }
    }
}

pub fn print_predicate(p: &Predicate) -> String {
    let mut s = String::new();
    write_pred(p, &mut s);
    s
}

/// One branch per line, followed by the explicit default rule.
pub fn print_policy(p: &Policy) -> String {
    let mut s = String::new();
    for (i, b) in p.branches.iter().enumerate() {
        s.push_str(if i == 0 { "if " } else { "elif " });
        write_pred(&b.guard, &mut s);
        s.push_str(&format!(": return {}\n", b.action));
    }
    if p.branches.is_empty() {
        s.push_str("return start\n");
    } else {
        s.push_str("else: return start\n");
    }
    s
}
