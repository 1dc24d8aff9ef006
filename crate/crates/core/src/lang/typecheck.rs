//! Dimensional type checking for expressions, predicates and policies.

use std::collections::BTreeSet;

use super::ast::{BinaryOp, Expr, Policy, Predicate};
use super::domain::DomainDefinition;
use super::types::{AspType, Value};
use crate::dim::Dimension;
use crate::error::TypeError;

/// Type of an arithmetic application, independent of the domain file.
pub fn arithmetic_type(op: BinaryOp, l: AspType, r: AspType) -> Result<AspType, TypeError> {
    use AspType::*;
    let mismatch = |a: Dimension, b: Dimension| TypeError::DimensionMismatch {
        context: format!("`{}`", op.name()),
        left: a,
        right: b,
    };
    let bad = || TypeError::OperatorType {
        op: op.name().to_string(),
        args: format!("{l}, {r}"),
    };
    match op {
        BinaryOp::Add | BinaryOp::Sub => match (l, r) {
            (Scalar(a), Scalar(b)) if a == b => Ok(Scalar(a)),
            (Vector(a), Vector(b)) if a == b => Ok(Vector(a)),
            (Scalar(a), Scalar(b)) | (Vector(a), Vector(b)) => Err(mismatch(a, b)),
            _ => Err(bad()),
        },
        BinaryOp::Mul => match (l, r) {
            (Scalar(a), Scalar(b)) => Ok(Scalar(a * b)),
            (Scalar(a), Vector(b)) | (Vector(a), Scalar(b)) => Ok(Vector(a * b)),
            _ => Err(bad()),
        },
        BinaryOp::Div => match (l, r) {
            (Scalar(a), Scalar(b)) => Ok(Scalar(a / b)),
            (Vector(a), Scalar(b)) => Ok(Vector(a / b)),
            _ => Err(bad()),
        },
        _ => Err(bad()),
    }
}

pub fn typecheck_expr(e: &Expr, dom: &DomainDefinition) -> Result<AspType, TypeError> {
    match e {
        Expr::Input { name, ty } => {
            let declared = dom
                .input_type(name)
                .ok_or_else(|| TypeError::UnknownVariable(name.clone()))?;
            if declared != *ty {
                return Err(TypeError::InputType {
                    name: name.clone(),
                    declared,
                    found: *ty,
                });
            }
            Ok(*ty)
        }
        Expr::Const { value, ty } => {
            let finite = match value {
                Value::Scalar(v) => v.is_finite(),
                Value::Vector([x, y]) => x.is_finite() && y.is_finite(),
                Value::Bool(_) => true,
            };
            if !value.fits(*ty) || !finite {
                return Err(TypeError::ConstShape(*ty));
            }
            Ok(*ty)
        }
        Expr::Blank(ty) => Ok(*ty),
        Expr::Unary { op, arg } => {
            let at = typecheck_expr(arg, dom)?;
            let sig = dom
                .unary_ops
                .get(op)
                .ok_or_else(|| TypeError::UnknownOperator(op.name().to_string()))?;
            sig.apply(&[at]).ok_or_else(|| TypeError::OperatorType {
                op: op.name().to_string(),
                args: at.to_string(),
            })
        }
        Expr::Binary { op, lhs, rhs } => {
            let l = typecheck_expr(lhs, dom)?;
            let r = typecheck_expr(rhs, dom)?;
            if op.is_arithmetic() {
                return arithmetic_type(*op, l, r);
            }
            let sig = dom
                .binary_ops
                .get(op)
                .ok_or_else(|| TypeError::UnknownOperator(op.name().to_string()))?;
            sig.apply(&[l, r]).ok_or_else(|| match (l, r) {
                (AspType::Vector(a), AspType::Vector(b)) | (AspType::Scalar(a), AspType::Scalar(b))
                    if a != b =>
                {
                    TypeError::DimensionMismatch {
                        context: format!("`{}`", op.name()),
                        left: a,
                        right: b,
                    }
                }
                _ => TypeError::OperatorType {
                    op: op.name().to_string(),
                    args: format!("{l}, {r}"),
                },
            })
        }
    }
}

pub fn typecheck_predicate(p: &Predicate, dom: &DomainDefinition) -> Result<(), TypeError> {
    match p {
        Predicate::True | Predicate::False | Predicate::Blank => Ok(()),
        Predicate::ActionEq(a) => {
            if dom.has_action(a) {
                Ok(())
            } else {
                Err(TypeError::UnknownAction(a.clone()))
            }
        }
        Predicate::Cmp { expr, param, .. } => match typecheck_expr(expr, dom)? {
            AspType::Scalar(d) if d == param.dim => Ok(()),
            AspType::Scalar(d) => Err(TypeError::DimensionMismatch {
                context: format!("threshold `{}`", param.name),
                left: d,
                right: param.dim,
            }),
            other => Err(TypeError::NotScalar(other)),
        },
        Predicate::And(a, b) | Predicate::Or(a, b) => {
            typecheck_predicate(a, dom)?;
            typecheck_predicate(b, dom)
        }
    }
}

pub fn typecheck_policy(p: &Policy, dom: &DomainDefinition) -> Result<(), TypeError> {
    let mut names = BTreeSet::new();
    for branch in &p.branches {
        typecheck_predicate(&branch.guard, dom)?;
        if !dom.has_action(&branch.action) {
            return Err(TypeError::UnknownAction(branch.action.clone()));
        }
        for param in branch.guard.params() {
            if !names.insert(param.name.as_str()) {
                return Err(TypeError::DuplicateParam(param.name.clone()));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{Action, Branch, Param, UnaryOp};

    fn dom() -> DomainDefinition {
        DomainDefinition::social()
    }

    fn var(name: &str) -> Expr {
        Expr::input(name, dom().input_type(name).unwrap())
    }

    #[test]
    fn angle_is_dimensionless() {
        let e = Expr::unary(UnaryOp::Angle, var("p_h"));
        assert_eq!(
            typecheck_expr(&e, &dom()),
            Ok(AspType::Scalar(Dimension::DIMENSIONLESS))
        );
    }

    #[test]
    fn norm_keeps_element_dimension() {
        let e = Expr::unary(UnaryOp::Norm, var("v_h"));
        assert_eq!(
            typecheck_expr(&e, &dom()),
            Ok(AspType::Scalar(Dimension::VELOCITY))
        );
    }

    #[test]
    fn adding_position_and_velocity_fails() {
        let e = Expr::binary(BinaryOp::Add, var("p_h"), var("v_h"));
        assert_eq!(
            typecheck_expr(&e, &dom()),
            Err(TypeError::DimensionMismatch {
                context: "`+`".into(),
                left: Dimension::LENGTH,
                right: Dimension::VELOCITY,
            })
        );
    }

    #[test]
    fn unknown_variable() {
        let e = Expr::input("p_q", AspType::Vector(Dimension::LENGTH));
        assert_eq!(
            typecheck_expr(&e, &dom()),
            Err(TypeError::UnknownVariable("p_q".into()))
        );
    }

    #[test]
    fn division_makes_time() {
        let e = Expr::binary(
            BinaryOp::Div,
            Expr::unary(UnaryOp::Norm, var("p_h")),
            Expr::unary(UnaryOp::Norm, var("v_h")),
        );
        assert_eq!(
            typecheck_expr(&e, &dom()),
            Ok(AspType::Scalar(Dimension::TIME))
        );
    }

    #[test]
    fn unknown_action_in_policy() {
        let p = Policy::new(vec![Branch {
            guard: Predicate::True,
            action: Action::new("Fly"),
        }]);
        assert_eq!(
            typecheck_policy(&p, &dom()),
            Err(TypeError::UnknownAction(Action::new("Fly")))
        );
    }

    #[test]
    fn threshold_dimension_must_match() {
        let p = Predicate::gt(
            Expr::unary(UnaryOp::Norm, var("p_h")),
            Param::new("th", Dimension::DIMENSIONLESS, 1.0),
        );
        assert!(matches!(
            typecheck_predicate(&p, &dom()),
            Err(TypeError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn duplicate_param_names_rejected() {
        let lit = || {
            Predicate::gt(
                Expr::unary(UnaryOp::Norm, var("p_h")),
                Param::new("th", Dimension::LENGTH, 1.0),
            )
        };
        let p = Policy::new(vec![
            Branch {
                guard: lit(),
                action: Action::new("Halt"),
            },
            Branch {
                guard: lit(),
                action: Action::new("Pass"),
            },
        ]);
        assert_eq!(
            typecheck_policy(&p, &dom()),
            Err(TypeError::DuplicateParam("th".into()))
        );
    }
}
