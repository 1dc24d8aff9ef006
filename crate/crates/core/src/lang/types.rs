use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dim::Dimension;

/// Name of a domain action (e.g. `GoAlone`).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Action(Arc<str>);

impl Action {
    pub fn new(name: &str) -> Self {
        Action(Arc::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for Action {
    fn from(s: &str) -> Self {
        Action::new(s)
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// The type of an expression or predicate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AspType {
    Bool,
    Scalar(Dimension),
    /// 2-D vector whose components both carry the dimension.
    Vector(Dimension),
}

impl AspType {
    pub fn dim(self) -> Option<Dimension> {
        match self {
            AspType::Bool => None,
            AspType::Scalar(d) | AspType::Vector(d) => Some(d),
        }
    }
}

impl fmt::Display for AspType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AspType::Bool => f.write_str("bool"),
            AspType::Scalar(d) => write!(f, "{d}"),
            AspType::Vector(d) => write!(f, "vec{d}"),
        }
    }
}

/// Runtime value of an expression.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Value {
    Bool(bool),
    Scalar(f64),
    Vector([f64; 2]),
}

impl Value {
    pub fn as_scalar(self) -> Option<f64> {
        match self {
            Value::Scalar(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_vector(self) -> Option<[f64; 2]> {
        match self {
            Value::Vector(v) => Some(v),
            _ => None,
        }
    }

    /// True if `self` has the runtime shape of `ty` (dimensions are static only).
    pub fn fits(self, ty: AspType) -> bool {
        matches!(
            (self, ty),
            (Value::Bool(_), AspType::Bool)
                | (Value::Scalar(_), AspType::Scalar(_))
                | (Value::Vector(_), AspType::Vector(_))
        )
    }
}

/// Threshold parameter. `value == None` is a blank (`?name`).
#[derive(Clone, Debug, PartialEq)]
pub struct Param {
    pub name: String,
    pub dim: Dimension,
    pub value: Option<f64>,
}

impl Param {
    pub fn new(name: impl Into<String>, dim: Dimension, value: f64) -> Self {
        Param {
            name: name.into(),
            dim,
            value: Some(value),
        }
    }

    pub fn blank(name: impl Into<String>, dim: Dimension) -> Self {
        Param {
            name: name.into(),
            dim,
            value: None,
        }
    }

    pub fn is_blank(&self) -> bool {
        self.value.is_none()
    }
}
