use thiserror::Error;

use crate::dim::Dimension;
use crate::lang::{Action, AspType};

#[derive(Debug, Error)]
pub enum DomainError {
    #[error("invalid domain json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported domain file version {0}")]
    Version(u32),
    #[error("`{0}` is reserved and cannot name an action")]
    ReservedAction(String),
    #[error("bad type `{0}`")]
    BadType(String),
    #[error("input `{0}` declared twice")]
    DuplicateInput(String),
    #[error("no evaluator for operator `{0}`")]
    UnknownOperator(String),
    #[error("operator `{0}` declared with the wrong number of arguments")]
    Arity(String),
    #[error("{0}: {1}")]
    Io(String, String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TypeError {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("input `{name}` has type {found}, domain declares {declared}")]
    InputType {
        name: String,
        declared: AspType,
        found: AspType,
    },
    #[error("dimension mismatch in {context}: {left} vs {right}")]
    DimensionMismatch {
        context: String,
        left: Dimension,
        right: Dimension,
    },
    #[error("operator `{op}` cannot be applied to ({args})")]
    OperatorType { op: String, args: String },
    #[error("operator `{op}` expects {expected} argument(s), got {found}")]
    ArityMismatch {
        op: String,
        expected: usize,
        found: usize,
    },
    #[error("operator `{0}` is not part of the domain")]
    UnknownOperator(String),
    #[error("comparison needs a scalar expression, got {0}")]
    NotScalar(AspType),
    #[error("unknown action `{0}`")]
    UnknownAction(Action),
    #[error("parameter `{0}` appears more than once")]
    DuplicateParam(String),
    #[error("constant value does not match its type {0}")]
    ConstShape(AspType),
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{line}:{col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LangError {
    #[error("parse error at {0}")]
    Parse(#[from] ParseError),
    #[error("type error: {0}")]
    Type(#[from] TypeError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("world state has no input `{0}`")]
    MissingInput(String),
    #[error("input `{0}` has the wrong shape")]
    InputShape(String),
    #[error("cannot evaluate a blank")]
    Blank,
    #[error("ill-typed expression reached the evaluator: {0}")]
    IllTyped(String),
}

#[derive(Debug, Error)]
pub enum DemoError {
    #[error("schema error at `{path}`: {msg}")]
    Schema { path: String, msg: String },
    #[error("unknown action `{0}` in demonstrations")]
    UnknownAction(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("{count} free parameters exceed the limit of {max}")]
    TooManyParams { count: usize, max: usize },
    #[error("constraint mentions unknown parameter `{0}`")]
    UnknownParam(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("no candidate predicate for {from} -> {to}")]
    NoCandidate { from: Action, to: Action },
    #[error("enumeration budget of {0} expressions exceeded")]
    BudgetExceeded(usize),
    #[error("no demonstrations")]
    NoDemos,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Type(#[from] TypeError),
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error("cannot rewind {requested} ticks; {available} are buffered")]
    RewindTooFar { requested: u64, available: u64 },
    #[error("{0}")]
    Io(#[from] std::io::Error),
}
