//! The action-selection-policy language.

mod ast;
mod domain;
mod parse;
mod print;
mod typecheck;
mod types;

pub use ast::{
    join_action_guard, split_action_guard, BinaryOp, Branch, Expr, Policy, Predicate, Relation,
    UnaryOp,
};
pub use domain::{parse_dims, parse_type, DimPattern, DomainDefinition, Signature, TypePattern};
pub use parse::{parse, parse_expr, parse_predicate};
pub use print::{print_expr, print_param, print_policy, print_predicate};
pub use typecheck::{arithmetic_type, typecheck_expr, typecheck_policy, typecheck_predicate};
pub use types::{Action, AspType, Param, Value};
