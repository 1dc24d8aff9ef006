//! Learning, optimizing and repairing human-readable robot action selection
//! policies from demonstrations, plus the social navigation simulator used to
//! produce demonstrations and evaluate policies.

pub mod demo;
pub mod dim;
pub mod error;
pub mod eval;
pub mod lang;
pub mod session;
pub mod sim;
pub mod solver;
pub mod synth;

pub use dim::Dimension;
pub use lang::{Action, AspType, DomainDefinition, Expr, Param, Policy, Predicate};
