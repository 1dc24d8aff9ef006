use std::fmt;

use super::types::{Action, AspType, Param, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum UnaryOp {
    Norm,
    Abs,
    /// `.x` accessor.
    Vx,
    /// `.y` accessor.
    Vy,
    Angle,
    FreePathLength,
}

impl UnaryOp {
    pub const ALL: [UnaryOp; 6] = [
        UnaryOp::FreePathLength,
        UnaryOp::Angle,
        UnaryOp::Norm,
        UnaryOp::Abs,
        UnaryOp::Vx,
        UnaryOp::Vy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            UnaryOp::Norm => "norm",
            UnaryOp::Abs => "abs",
            UnaryOp::Vx => "x",
            UnaryOp::Vy => "y",
            UnaryOp::Angle => "angle",
            UnaryOp::FreePathLength => "freePathLength",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|op| op.name() == name)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Dist,
    AngleDist,
}

impl BinaryOp {
    pub const ALL: [BinaryOp; 6] = [
        BinaryOp::Add,
        BinaryOp::Sub,
        BinaryOp::Mul,
        BinaryOp::Div,
        BinaryOp::Dist,
        BinaryOp::AngleDist,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Dist => "dist",
            BinaryOp::AngleDist => "angleDist",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|op| op.name() == name)
    }

    pub fn is_arithmetic(self) -> bool {
        matches!(
            self,
            BinaryOp::Add | BinaryOp::Sub | BinaryOp::Mul | BinaryOp::Div
        )
    }

    pub fn is_commutative(self) -> bool {
        matches!(
            self,
            BinaryOp::Add | BinaryOp::Mul | BinaryOp::Dist | BinaryOp::AngleDist
        )
    }

    /// Infix binding strength; `None` for call-syntax operators.
    pub fn precedence(self) -> Option<u8> {
        match self {
            BinaryOp::Add | BinaryOp::Sub => Some(1),
            BinaryOp::Mul | BinaryOp::Div => Some(2),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Input { name: String, ty: AspType },
    Const { value: Value, ty: AspType },
    Unary { op: UnaryOp, arg: Box<Expr> },
    Binary { op: BinaryOp, lhs: Box<Expr>, rhs: Box<Expr> },
    Blank(AspType),
}

impl Expr {
    pub fn input(name: &str, ty: AspType) -> Self {
        Expr::Input {
            name: name.to_string(),
            ty,
        }
    }

    pub fn unary(op: UnaryOp, arg: Expr) -> Self {
        Expr::Unary {
            op,
            arg: Box::new(arg),
        }
    }

    pub fn binary(op: BinaryOp, lhs: Expr, rhs: Expr) -> Self {
        Expr::Binary {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        }
    }

    /// Height of the operator tree; inputs and constants have depth 0.
    pub fn depth(&self) -> usize {
        match self {
            Expr::Input { .. } | Expr::Const { .. } | Expr::Blank(_) => 0,
            Expr::Unary { arg, .. } => 1 + arg.depth(),
            Expr::Binary { lhs, rhs, .. } => 1 + lhs.depth().max(rhs.depth()),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Expr::Input { .. } | Expr::Const { .. } | Expr::Blank(_) => 1,
            Expr::Unary { arg, .. } => 1 + arg.size(),
            Expr::Binary { lhs, rhs, .. } => 1 + lhs.size() + rhs.size(),
        }
    }

    pub fn has_blank(&self) -> bool {
        match self {
            Expr::Blank(_) => true,
            Expr::Input { .. } | Expr::Const { .. } => false,
            Expr::Unary { arg, .. } => arg.has_blank(),
            Expr::Binary { lhs, rhs, .. } => lhs.has_blank() || rhs.has_blank(),
        }
    }
}

/// Comparison relation of a threshold literal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum Relation {
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = "<")]
    Lt,
}

impl Relation {
    pub fn holds(self, value: f64, threshold: f64) -> bool {
        match self {
            Relation::Gt => value > threshold,
            Relation::Lt => value < threshold,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Gt => ">",
            Relation::Lt => "<",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Predicate {
    True,
    False,
    /// `start == action`: the previous action equals `action`.
    ActionEq(Action),
    Cmp {
        rel: Relation,
        expr: Expr,
        param: Param,
    },
    And(Box<Predicate>, Box<Predicate>),
    Or(Box<Predicate>, Box<Predicate>),
    Blank,
}

impl Predicate {
    pub fn gt(expr: Expr, param: Param) -> Self {
        Predicate::Cmp {
            rel: Relation::Gt,
            expr,
            param,
        }
    }

    pub fn lt(expr: Expr, param: Param) -> Self {
        Predicate::Cmp {
            rel: Relation::Lt,
            expr,
            param,
        }
    }

    pub fn and(a: Predicate, b: Predicate) -> Self {
        Predicate::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Predicate, b: Predicate) -> Self {
        Predicate::Or(Box::new(a), Box::new(b))
    }

    pub fn has_blank(&self) -> bool {
        match self {
            Predicate::Blank => true,
            Predicate::True | Predicate::False | Predicate::ActionEq(_) => false,
            Predicate::Cmp { expr, param, .. } => param.is_blank() || expr.has_blank(),
            Predicate::And(a, b) | Predicate::Or(a, b) => a.has_blank() || b.has_blank(),
        }
    }

    /// Parameters in left-to-right order.
    pub fn params(&self) -> Vec<&Param> {
        let mut out = Vec::new();
        self.visit_literals(&mut |_, _, p| out.push(p));
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        fn go<'a>(p: &'a mut Predicate, out: &mut Vec<&'a mut Param>) {
            match p {
                Predicate::Cmp { param, .. } => out.push(param),
                Predicate::And(a, b) | Predicate::Or(a, b) => {
                    go(a, out);
                    go(b, out);
                }
                _ => {}
            }
        }
        let mut out = Vec::new();
        go(self, &mut out);
        out
    }

    /// Calls `f(rel, expr, param)` for every threshold literal, left to right.
    pub fn visit_literals<'a>(&'a self, f: &mut dyn FnMut(Relation, &'a Expr, &'a Param)) {
        match self {
            Predicate::Cmp { rel, expr, param } => f(*rel, expr, param),
            Predicate::And(a, b) | Predicate::Or(a, b) => {
                a.visit_literals(f);
                b.visit_literals(f);
            }
            _ => {}
        }
    }

    pub fn literal_count(&self) -> usize {
        let mut n = 0;
        self.visit_literals(&mut |_, _, _| n += 1);
        n
    }

    /// Sum of expression depths over all literals.
    pub fn expr_depth(&self) -> usize {
        let mut d = 0;
        self.visit_literals(&mut |_, e, _| d += e.depth());
        d
    }

    pub fn blank_count(&self) -> usize {
        match self {
            Predicate::Blank => 1,
            Predicate::And(a, b) | Predicate::Or(a, b) => a.blank_count() + b.blank_count(),
            _ => 0,
        }
    }

    /// Top-level conjuncts, flattening nested `And`s.
    pub fn conjuncts(&self) -> Vec<&Predicate> {
        match self {
            Predicate::And(a, b) => {
                let mut v = a.conjuncts();
                v.extend(b.conjuncts());
                v
            }
            other => vec![other],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Branch {
    pub guard: Predicate,
    pub action: Action,
}

/// Ordered guarded branches; when no guard holds the previous action is kept.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Policy {
    pub branches: Vec<Branch>,
}

impl Policy {
    pub fn new(branches: Vec<Branch>) -> Self {
        Policy { branches }
    }

    pub fn params(&self) -> Vec<&Param> {
        self.branches.iter().flat_map(|b| b.guard.params()).collect()
    }

    /// Smallest `th{k}` name not used by any parameter.
    pub fn fresh_param_name(&self, taken: &[String]) -> String {
        let used: std::collections::BTreeSet<&str> = self
            .params()
            .into_iter()
            .map(|p| p.name.as_str())
            .chain(taken.iter().map(|s| s.as_str()))
            .collect();
        (0..)
            .map(|k| format!("th{k}"))
            .find(|n| !used.contains(n.as_str()))
            .expect("unbounded")
    }
}

impl Branch {
    /// The action `a` of a leading `start == a` conjunct, if any.
    pub fn source_action(&self) -> Option<&Action> {
        self.guard.conjuncts().into_iter().find_map(|c| match c {
            Predicate::ActionEq(a) => Some(a),
            _ => None,
        })
    }

    /// Splits a `start == a && body` guard into `(a, body)`.
    pub fn split_guard(&self) -> Option<(Action, Predicate)> {
        split_action_guard(&self.guard)
    }
}

/// `start == a && body` → `(a, body)`; a bare `start == a` has body `true`.
pub fn split_action_guard(guard: &Predicate) -> Option<(Action, Predicate)> {
    match guard {
        Predicate::ActionEq(a) => Some((a.clone(), Predicate::True)),
        Predicate::And(lhs, rhs) => match lhs.as_ref() {
            Predicate::ActionEq(a) => Some((a.clone(), rhs.as_ref().clone())),
            _ => {
                let (a, inner) = split_action_guard(lhs)?;
                let body = match inner {
                    Predicate::True => rhs.as_ref().clone(),
                    inner => Predicate::and(inner, rhs.as_ref().clone()),
                };
                Some((a, body))
            }
        },
        _ => None,
    }
}

/// Rebuilds `start == a && c1 && c2 ...` as a left-nested chain over the
/// conjuncts of `body` (a `true` body is dropped).
pub fn join_action_guard(action: Action, body: Predicate) -> Predicate {
    if body == Predicate::True {
        return Predicate::ActionEq(action);
    }
    body.conjuncts()
        .into_iter()
        .cloned()
        .fold(Predicate::ActionEq(action), Predicate::and)
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&super::print::print_expr(self))
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&super::print::print_predicate(self))
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&super::print::print_policy(self))
    }
}
