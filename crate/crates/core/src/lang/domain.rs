//! Domain definitions: the action set, typed inputs and operator signatures.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ast::{BinaryOp, UnaryOp};
use super::types::{Action, AspType};
use crate::dim::Dimension;
use crate::error::DomainError;

/// Dimension slot of a signature: fixed, or the signature's single variable `D`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DimPattern {
    Fixed(Dimension),
    Var,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TypePattern {
    Bool,
    Scalar(DimPattern),
    Vector(DimPattern),
}

impl TypePattern {
    pub fn parse(s: &str) -> Result<Self, DomainError> {
        let s = s.trim();
        if s == "bool" {
            return Ok(TypePattern::Bool);
        }
        let (is_vec, rest) = match s.strip_prefix("vec") {
            Some(r) => (true, r.trim()),
            None => (false, s),
        };
        let dim = if rest == "D" {
            DimPattern::Var
        } else {
            DimPattern::Fixed(parse_dims(rest).ok_or_else(|| DomainError::BadType(s.into()))?)
        };
        Ok(if is_vec {
            TypePattern::Vector(dim)
        } else {
            TypePattern::Scalar(dim)
        })
    }

    fn bind(self, ty: AspType, var: &mut Option<Dimension>) -> bool {
        let (pat, d) = match (self, ty) {
            (TypePattern::Bool, AspType::Bool) => return true,
            (TypePattern::Scalar(p), AspType::Scalar(d)) => (p, d),
            (TypePattern::Vector(p), AspType::Vector(d)) => (p, d),
            _ => return false,
        };
        match pat {
            DimPattern::Fixed(f) => f == d,
            DimPattern::Var => match var {
                Some(v) => *v == d,
                None => {
                    *var = Some(d);
                    true
                }
            },
        }
    }

    fn instantiate(self, var: Option<Dimension>) -> Option<AspType> {
        let resolve = |p: DimPattern| match p {
            DimPattern::Fixed(d) => Some(d),
            DimPattern::Var => var,
        };
        Some(match self {
            TypePattern::Bool => AspType::Bool,
            TypePattern::Scalar(p) => AspType::Scalar(resolve(p)?),
            TypePattern::Vector(p) => AspType::Vector(resolve(p)?),
        })
    }

    fn render(self) -> String {
        let d = |p: DimPattern| match p {
            DimPattern::Fixed(d) => d.to_string(),
            DimPattern::Var => "D".to_string(),
        };
        match self {
            TypePattern::Bool => "bool".into(),
            TypePattern::Scalar(p) => d(p),
            TypePattern::Vector(p) => format!("vec {}", d(p)),
        }
    }
}

/// Parses `[l,t,m]`.
pub fn parse_dims(s: &str) -> Option<Dimension> {
    let inner = s.trim().strip_prefix('[')?.strip_suffix(']')?;
    let parts: Vec<i32> = inner
        .split(',')
        .map(|p| p.trim().parse().ok())
        .collect::<Option<_>>()?;
    match parts.as_slice() {
        [l, t, m] => Some(Dimension::new(*l, *t, *m)),
        _ => None,
    }
}

pub fn parse_type(s: &str) -> Option<AspType> {
    match TypePattern::parse(s).ok()? {
        TypePattern::Bool => Some(AspType::Bool),
        TypePattern::Scalar(DimPattern::Fixed(d)) => Some(AspType::Scalar(d)),
        TypePattern::Vector(DimPattern::Fixed(d)) => Some(AspType::Vector(d)),
        _ => None,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Signature {
    pub args: Vec<TypePattern>,
    pub ret: TypePattern,
}

impl Signature {
    /// Result type for the given argument types, or `None` on mismatch.
    pub fn apply(&self, args: &[AspType]) -> Option<AspType> {
        if args.len() != self.args.len() {
            return None;
        }
        let mut var = None;
        for (p, t) in self.args.iter().zip(args) {
            if !p.bind(*t, &mut var) {
                return None;
            }
        }
        self.ret.instantiate(var)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DomainDefinition {
    pub actions: Vec<Action>,
    pub inputs: Vec<(String, AspType)>,
    pub unary_ops: BTreeMap<UnaryOp, Signature>,
    pub binary_ops: BTreeMap<BinaryOp, Signature>,
    /// Arithmetic operators offered to the expression enumerator.
    pub enumerated_arithmetic: Vec<BinaryOp>,
}

impl DomainDefinition {
    pub fn has_action(&self, a: &Action) -> bool {
        self.actions.contains(a)
    }

    pub fn input_type(&self, name: &str) -> Option<AspType> {
        self.inputs
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, t)| *t)
    }

    pub fn action(&self, name: &str) -> Option<Action> {
        self.actions.iter().find(|a| a.as_str() == name).cloned()
    }

    /// The social navigation domain.
    pub fn social() -> Self {
        let text = include_str!("../../../../domains/social.json");
        DomainDefinition::from_json(text).expect("bundled social domain is valid")
    }

    pub fn from_json(text: &str) -> Result<Self, DomainError> {
        let file: DomainFile = serde_json::from_str(text)?;
        file.try_into()
    }

    pub fn load(path: &Path) -> Result<Self, DomainError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| DomainError::Io(path.display().to_string(), e.to_string()))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        let file = DomainFile::from(self);
        serde_json::to_string_pretty(&file).expect("domain serializes")
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DomainFile {
    v: u32,
    actions: Vec<String>,
    inputs: Vec<InputDecl>,
    #[serde(default)]
    unary_ops: Vec<OpDecl>,
    #[serde(default)]
    binary_ops: Vec<OpDecl>,
    #[serde(default)]
    arithmetic: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InputDecl {
    name: String,
    #[serde(rename = "type")]
    ty: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OpDecl {
    name: String,
    args: Vec<String>,
    ret: String,
}

impl TryFrom<DomainFile> for DomainDefinition {
    type Error = DomainError;

    fn try_from(f: DomainFile) -> Result<Self, DomainError> {
        if f.v != 1 {
            return Err(DomainError::Version(f.v));
        }
        let mut actions = Vec::new();
        for a in f.actions {
            if a == "start" {
                return Err(DomainError::ReservedAction(a));
            }
            let a = Action::new(&a);
            if !actions.contains(&a) {
                actions.push(a);
            }
        }
        let mut inputs: Vec<(String, AspType)> = Vec::new();
        for i in f.inputs {
            let ty = parse_type(&i.ty).ok_or_else(|| DomainError::BadType(i.ty.clone()))?;
            if inputs.iter().any(|(n, _)| *n == i.name) {
                return Err(DomainError::DuplicateInput(i.name));
            }
            inputs.push((i.name, ty));
        }
        let sig = |d: &OpDecl| -> Result<Signature, DomainError> {
            Ok(Signature {
                args: d
                    .args
                    .iter()
                    .map(|a| TypePattern::parse(a))
                    .collect::<Result<_, _>>()?,
                ret: TypePattern::parse(&d.ret)?,
            })
        };
        let mut unary_ops = BTreeMap::new();
        for d in &f.unary_ops {
            let op = UnaryOp::from_name(&d.name)
                .ok_or_else(|| DomainError::UnknownOperator(d.name.clone()))?;
            let s = sig(d)?;
            if s.args.len() != 1 {
                return Err(DomainError::Arity(d.name.clone()));
            }
            unary_ops.insert(op, s);
        }
        let mut binary_ops = BTreeMap::new();
        for d in &f.binary_ops {
            let op = BinaryOp::from_name(&d.name)
                .filter(|op| !op.is_arithmetic())
                .ok_or_else(|| DomainError::UnknownOperator(d.name.clone()))?;
            let s = sig(d)?;
            if s.args.len() != 2 {
                return Err(DomainError::Arity(d.name.clone()));
            }
            binary_ops.insert(op, s);
        }
        let enumerated_arithmetic = f
            .arithmetic
            .iter()
            .map(|n| {
                BinaryOp::from_name(n)
                    .filter(|op| op.is_arithmetic())
                    .ok_or_else(|| DomainError::UnknownOperator(n.clone()))
            })
            .collect::<Result<_, _>>()?;
        Ok(DomainDefinition {
            actions,
            inputs,
            unary_ops,
            binary_ops,
            enumerated_arithmetic,
        })
    }
}

impl From<&DomainDefinition> for DomainFile {
    fn from(d: &DomainDefinition) -> Self {
        let decl = |name: &str, s: &Signature| OpDecl {
            name: name.to_string(),
            args: s.args.iter().map(|a| a.render()).collect(),
            ret: s.ret.render(),
        };
        DomainFile {
            v: 1,
            actions: d.actions.iter().map(|a| a.to_string()).collect(),
            inputs: d
                .inputs
                .iter()
                .map(|(n, t)| InputDecl {
                    name: n.clone(),
                    ty: t.to_string(),
                })
                .collect(),
            unary_ops: d.unary_ops.iter().map(|(o, s)| decl(o.name(), s)).collect(),
            binary_ops: d.binary_ops.iter().map(|(o, s)| decl(o.name(), s)).collect(),
            arithmetic: d
                .enumerated_arithmetic
                .iter()
                .map(|o| o.name().to_string())
                .collect(),
        }
    }
}
