//! Evaluation of expressions, predicates and policies on world states,
//! partial evaluation to parameter constraints, and predicate scoring.

mod partial;
mod world;

use std::sync::Arc;

use crate::error::EvalError;
use crate::lang::{Action, BinaryOp, Expr, Policy, Predicate, Relation, UnaryOp, Value};

pub use partial::{partial_eval, ResidualConstraint, ResidualFormula};
pub use world::{Disc, Obstacles, Segment, WorldState, FREE_PATH_MAX};

/// A world state together with the action that was running when it was observed.
#[derive(Clone, Debug, PartialEq)]
pub struct Example {
    pub prev: Action,
    pub world: Arc<WorldState>,
}

impl Example {
    pub fn new(prev: Action, world: Arc<WorldState>) -> Self {
        Example { prev, world }
    }
}

fn wrap_angle(a: f64) -> f64 {
    (a + std::f64::consts::PI).rem_euclid(std::f64::consts::TAU) - std::f64::consts::PI
}

/// Applies a unary operator to an evaluated argument.
pub fn apply_unary(op: UnaryOp, a: Value, w: &WorldState) -> Result<Value, EvalError> {
    Ok(match (op, a) {
        (UnaryOp::Norm, Value::Vector([x, y])) => Value::Scalar(x.hypot(y)),
        (UnaryOp::Abs, Value::Scalar(x)) => Value::Scalar(x.abs()),
        (UnaryOp::Vx, Value::Vector([x, _])) => Value::Scalar(x),
        (UnaryOp::Vy, Value::Vector([_, y])) => Value::Scalar(y),
        (UnaryOp::Angle, Value::Vector([x, y])) => Value::Scalar(y.atan2(x)),
        (UnaryOp::FreePathLength, Value::Vector(v)) => Value::Scalar(w.obstacles.free_path_length(v)),
        _ => return Err(EvalError::IllTyped(op.name().to_string())),
    })
}

/// Applies a binary operator to evaluated arguments.
pub fn apply_binary(op: BinaryOp, l: Value, r: Value) -> Result<Value, EvalError> {
    use Value::{Scalar as S, Vector as V};
    Ok(match (op, l, r) {
        (BinaryOp::Add, S(a), S(b)) => S(a + b),
        (BinaryOp::Add, V(a), V(b)) => V([a[0] + b[0], a[1] + b[1]]),
        (BinaryOp::Sub, S(a), S(b)) => S(a - b),
        (BinaryOp::Sub, V(a), V(b)) => V([a[0] - b[0], a[1] - b[1]]),
        (BinaryOp::Mul, S(a), S(b)) => S(a * b),
        (BinaryOp::Mul, S(a), V(b)) | (BinaryOp::Mul, V(b), S(a)) => V([a * b[0], a * b[1]]),
        (BinaryOp::Div, S(a), S(b)) => S(a / b),
        (BinaryOp::Div, V(a), S(b)) => V([a[0] / b, a[1] / b]),
        (BinaryOp::Dist, V(a), V(b)) => S((a[0] - b[0]).hypot(a[1] - b[1])),
        (BinaryOp::AngleDist, S(a), S(b)) => S(wrap_angle(a - b).abs()),
        _ => return Err(EvalError::IllTyped(op.name().to_string())),
    })
}

pub fn eval_expr(e: &Expr, w: &WorldState) -> Result<Value, EvalError> {
    match e {
        Expr::Input { name, ty } => {
            let v = w
                .get(name)
                .ok_or_else(|| EvalError::MissingInput(name.clone()))?;
            if !v.fits(*ty) {
                return Err(EvalError::InputShape(name.clone()));
            }
            Ok(v)
        }
        Expr::Const { value, .. } => Ok(*value),
        Expr::Blank(_) => Err(EvalError::Blank),
        Expr::Unary { op, arg } => apply_unary(*op, eval_expr(arg, w)?, w),
        Expr::Binary { op, lhs, rhs } => apply_binary(*op, eval_expr(lhs, w)?, eval_expr(rhs, w)?),
    }
}

fn scalar_of(e: &Expr, w: &WorldState) -> Result<f64, EvalError> {
    eval_expr(e, w)?
        .as_scalar()
        .ok_or_else(|| EvalError::IllTyped("comparison of a non-scalar".into()))
}

pub fn eval_predicate(p: &Predicate, prev: &Action, w: &WorldState) -> Result<bool, EvalError> {
    Ok(match p {
        Predicate::True => true,
        Predicate::False => false,
        Predicate::Blank => return Err(EvalError::Blank),
        Predicate::ActionEq(a) => a == prev,
        Predicate::Cmp { rel, expr, param } => {
            let th = param.value.ok_or(EvalError::Blank)?;
            rel.holds(scalar_of(expr, w)?, th)
        }
        Predicate::And(a, b) => eval_predicate(a, prev, w)? && eval_predicate(b, prev, w)?,
        Predicate::Or(a, b) => eval_predicate(a, prev, w)? || eval_predicate(b, prev, w)?,
    })
}

/// Runs the policy: the first branch whose guard holds decides, otherwise the
/// previous action is kept. A guard that fails to evaluate counts as false.
pub fn eval_policy(p: &Policy, prev: &Action, w: &WorldState) -> Action {
    p.branches
        .iter()
        .find(|b| eval_predicate(&b.guard, prev, w).unwrap_or(false))
        .map(|b| b.action.clone())
        .unwrap_or_else(|| prev.clone())
}

/// Evaluated threshold literal, for decision traces.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LiteralTrace {
    pub expr: String,
    pub value: Option<f64>,
    pub rel: Relation,
    pub param: String,
    pub threshold: Option<f64>,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BranchTrace {
    pub index: usize,
    pub action: Action,
    pub fired: bool,
    pub literals: Vec<LiteralTrace>,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DecisionTrace {
    pub prev: Action,
    pub next: Action,
    /// Index of the branch that fired; `None` when the default rule applied.
    pub fired: Option<usize>,
    pub branches: Vec<BranchTrace>,
}

/// Like [`eval_policy`], but records every evaluated branch up to the one that fired.
pub fn trace_policy(p: &Policy, prev: &Action, w: &WorldState) -> DecisionTrace {
    let mut branches = Vec::new();
    let mut fired = None;
    for (index, b) in p.branches.iter().enumerate() {
        let mut literals = Vec::new();
        b.guard.visit_literals(&mut |rel, expr, param| {
            let value = scalar_of(expr, w).ok();
            let holds = match (value, param.value) {
                (Some(v), Some(t)) => rel.holds(v, t),
                _ => false,
            };
            literals.push(LiteralTrace {
                expr: expr.to_string(),
                value,
                rel,
                param: param.name.clone(),
                threshold: param.value,
                holds,
            });
        });
        let ok = eval_predicate(&b.guard, prev, w).unwrap_or(false);
        branches.push(BranchTrace {
            index,
            action: b.action.clone(),
            fired: ok,
            literals,
        });
        if ok {
            fired = Some(index);
            break;
        }
    }
    let next = fired
        .map(|i| p.branches[i].action.clone())
        .unwrap_or_else(|| prev.clone());
    DecisionTrace {
        prev: prev.clone(),
        next,
        fired,
        branches,
    }
}

/// Fraction of examples `b` is consistent with: true on `pos`, false on `neg`.
/// Empty example sets score 1. Evaluation errors count as `false`.
pub fn score(b: &Predicate, pos: &[Example], neg: &[Example]) -> f64 {
    let total = pos.len() + neg.len();
    if total == 0 {
        return 1.0;
    }
    let holds = |e: &Example| eval_predicate(b, &e.prev, &e.world).unwrap_or(false);
    let good = pos.iter().filter(|e| holds(e)).count() + neg.iter().filter(|e| !holds(e)).count();
    good as f64 / total as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dim::Dimension;
    use crate::lang::{parse, parse_expr, parse_predicate, AspType, DomainDefinition, Param};

    fn dom() -> DomainDefinition {
        DomainDefinition::social()
    }

    fn konst(x: f64, y: f64) -> Expr {
        Expr::Const {
            value: Value::Vector([x, y]),
            ty: AspType::Vector(Dimension::LENGTH),
        }
    }

    #[test]
    fn norm_of_three_four() {
        let e = Expr::unary(UnaryOp::Norm, konst(3.0, 4.0));
        assert_eq!(eval_expr(&e, &WorldState::new()), Ok(Value::Scalar(5.0)));
    }

    #[test]
    fn abs_of_negative_speed() {
        let e = parse_expr("abs(-2.0 [1,-1,0])", &dom()).unwrap();
        assert_eq!(eval_expr(&e, &WorldState::new()), Ok(Value::Scalar(2.0)));
    }

    #[test]
    fn dist_between_humans() {
        let w = WorldState::new()
            .with("p_h", Value::Vector([1.0, 0.0]))
            .with("p_hl", Value::Vector([1.0, 3.0]));
        let e = parse_expr("dist(p_h, p_hl)", &dom()).unwrap();
        assert_eq!(eval_expr(&e, &w), Ok(Value::Scalar(3.0)));
    }

    #[test]
    fn missing_input() {
        let e = parse_expr("norm(v_h)", &dom()).unwrap();
        assert_eq!(
            eval_expr(&e, &WorldState::new()),
            Err(EvalError::MissingInput("v_h".into()))
        );
    }

    #[test]
    fn angle_dist_wraps() {
        let e = Expr::binary(
            BinaryOp::AngleDist,
            Expr::Const {
                value: Value::Scalar(3.0),
                ty: AspType::Scalar(Dimension::DIMENSIONLESS),
            },
            Expr::Const {
                value: Value::Scalar(-3.0),
                ty: AspType::Scalar(Dimension::DIMENSIONLESS),
            },
        );
        let Value::Scalar(v) = eval_expr(&e, &WorldState::new()).unwrap() else {
            panic!()
        };
        assert!((v - (std::f64::consts::TAU - 6.0)).abs() < 1e-12);
    }

    #[test]
    fn empty_policy_keeps_previous_action() {
        let p = Policy::default();
        let halt = Action::new("Halt");
        assert_eq!(eval_policy(&p, &halt, &WorldState::new()), halt);
    }

    #[test]
    fn first_matching_branch_wins() {
        let p = parse(
            "if true: return Pass\nelif true: return Follow",
            &dom(),
        )
        .unwrap();
        let t = trace_policy(&p, &Action::new("GoAlone"), &WorldState::new());
        assert_eq!(t.next, Action::new("Pass"));
        assert_eq!(t.fired, Some(0));
        assert_eq!(t.branches.len(), 1);
    }

    #[test]
    fn score_counts_consistency() {
        let w = Arc::new(WorldState::new());
        let ex = || Example::new(Action::new("GoAlone"), w.clone());
        assert_eq!(score(&Predicate::True, &[ex()], &[]), 1.0);
        assert_eq!(score(&Predicate::True, &[], &[ex()]), 0.0);
        assert_eq!(score(&Predicate::False, &[], &[]), 1.0);
        // 3 of 4 consistent
        assert_eq!(score(&Predicate::True, &[ex(), ex(), ex()], &[ex()]), 0.75);
    }

    #[test]
    fn literal_threshold() {
        let d = dom();
        let w = WorldState::new().with("p_h", Value::Vector([3.0, 4.0]));
        let halt = Action::new("Halt");
        let b = parse_predicate("norm(p_h) > t [1,0,0] = 4.5", &d).unwrap();
        assert_eq!(eval_predicate(&b, &halt, &w), Ok(true));
        let b = Predicate::lt(
            parse_expr("norm(p_h)", &d).unwrap(),
            Param::new("t", Dimension::LENGTH, 4.5),
        );
        assert_eq!(eval_predicate(&b, &halt, &w), Ok(false));
        let blank = parse_predicate("norm(p_h) > ?t [1,0,0]", &d).unwrap();
        assert_eq!(eval_predicate(&blank, &halt, &w), Err(EvalError::Blank));
    }
}
