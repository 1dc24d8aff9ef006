use crate::error::EvalError;
use crate::lang::{Action, Predicate, Relation};

use super::{eval_expr, WorldState};

/// A predicate with every expression folded to a constant; only parameter
/// symbols remain.
#[derive(Clone, Debug, PartialEq)]
pub enum ResidualFormula {
    Const(bool),
    Leaf {
        observed: f64,
        rel: Relation,
        param: String,
    },
    And(Box<ResidualFormula>, Box<ResidualFormula>),
    Or(Box<ResidualFormula>, Box<ResidualFormula>),
}

impl ResidualFormula {
    pub fn and(a: ResidualFormula, b: ResidualFormula) -> Self {
        use ResidualFormula::Const;
        match (a, b) {
            (Const(false), _) | (_, Const(false)) => Const(false),
            (Const(true), x) | (x, Const(true)) => x,
            (a, b) => ResidualFormula::And(Box::new(a), Box::new(b)),
        }
    }

    pub fn or(a: ResidualFormula, b: ResidualFormula) -> Self {
        use ResidualFormula::Const;
        match (a, b) {
            (Const(true), _) | (_, Const(true)) => Const(true),
            (Const(false), x) | (x, Const(false)) => x,
            (a, b) => ResidualFormula::Or(Box::new(a), Box::new(b)),
        }
    }

    /// Truth value under a parameter assignment; unassigned parameters make
    /// their leaf false.
    pub fn eval(&self, assign: &dyn Fn(&str) -> Option<f64>) -> bool {
        match self {
            ResidualFormula::Const(b) => *b,
            ResidualFormula::Leaf {
                observed,
                rel,
                param,
            } => assign(param).is_some_and(|t| rel.holds(*observed, t)),
            ResidualFormula::And(a, b) => a.eval(assign) && b.eval(assign),
            ResidualFormula::Or(a, b) => a.eval(assign) || b.eval(assign),
        }
    }

    /// Calls `f` on every leaf, left to right.
    pub fn leaves(&self, f: &mut dyn FnMut(f64, Relation, &str)) {
        match self {
            ResidualFormula::Const(_) => {}
            ResidualFormula::Leaf {
                observed,
                rel,
                param,
            } => f(*observed, *rel, param),
            ResidualFormula::And(a, b) | ResidualFormula::Or(a, b) => {
                a.leaves(f);
                b.leaves(f);
            }
        }
    }
}

/// A residual formula together with the truth value it must take.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualConstraint {
    pub formula: ResidualFormula,
    pub target: bool,
}

impl ResidualConstraint {
    pub fn satisfied(&self, assign: &dyn Fn(&str) -> Option<f64>) -> bool {
        self.formula.eval(assign) == self.target
    }
}

/// Folds `b` against `w` (with `prev` as the running action). Parameter
/// values are ignored; each literal becomes a leaf over its parameter name.
pub fn partial_eval(
    b: &Predicate,
    prev: &Action,
    w: &WorldState,
) -> Result<ResidualFormula, EvalError> {
    Ok(match b {
        Predicate::True => ResidualFormula::Const(true),
        Predicate::False => ResidualFormula::Const(false),
        Predicate::Blank => return Err(EvalError::Blank),
        Predicate::ActionEq(a) => ResidualFormula::Const(a == prev),
        Predicate::Cmp { rel, expr, param } => {
            let observed = eval_expr(expr, w)?
                .as_scalar()
                .ok_or_else(|| EvalError::IllTyped("comparison of a non-scalar".into()))?;
            ResidualFormula::Leaf {
                observed,
                rel: *rel,
                param: param.name.clone(),
            }
        }
        Predicate::And(x, y) => {
            ResidualFormula::and(partial_eval(x, prev, w)?, partial_eval(y, prev, w)?)
        }
        Predicate::Or(x, y) => {
            ResidualFormula::or(partial_eval(x, prev, w)?, partial_eval(y, prev, w)?)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{parse_predicate, DomainDefinition, Value};

    #[test]
    fn literal_becomes_leaf() {
        let d = DomainDefinition::social();
        let w = WorldState::new().with("p_h", Value::Vector([3.0, 4.0]));
        let b = parse_predicate("norm(p_h) > th [1,0,0] = 1.0", &d).unwrap();
        let r = partial_eval(&b, &Action::new("Halt"), &w).unwrap();
        assert_eq!(
            r,
            ResidualFormula::Leaf {
                observed: 5.0,
                rel: Relation::Gt,
                param: "th".into()
            }
        );
    }

    #[test]
    fn conjunction_with_true_folds_away() {
        let d = DomainDefinition::social();
        let w = WorldState::new().with("p_h", Value::Vector([2.0, 0.0]));
        let b = parse_predicate("true && norm(p_h) < th [1,0,0] = 1.0", &d).unwrap();
        let r = partial_eval(&b, &Action::new("Halt"), &w).unwrap();
        assert_eq!(
            r,
            ResidualFormula::Leaf {
                observed: 2.0,
                rel: Relation::Lt,
                param: "th".into()
            }
        );
    }

    #[test]
    fn action_guard_folds() {
        let d = DomainDefinition::social();
        let w = WorldState::new().with("p_h", Value::Vector([2.0, 0.0]));
        let b = parse_predicate("start == GoAlone && norm(p_h) < th [1,0,0] = 1.0", &d).unwrap();
        let r = partial_eval(&b, &Action::new("Halt"), &w).unwrap();
        assert_eq!(r, ResidualFormula::Const(false));
    }

    #[test]
    fn blanks_are_rejected() {
        let r = partial_eval(&Predicate::Blank, &Action::new("Halt"), &WorldState::new());
        assert_eq!(r, Err(EvalError::Blank));
    }
}
