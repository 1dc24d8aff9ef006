//! Bottom-up expression enumeration with observational deduplication.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use crate::error::SynthError;
use crate::eval::{apply_binary, apply_unary, WorldState};
use crate::lang::{arithmetic_type, AspType, BinaryOp, DomainDefinition, Expr, Value};

const NAN2: [f64; 2] = [f64::NAN, f64::NAN];

#[derive(Clone, Debug)]
enum Column {
    Scalar(Vec<f64>),
    Vector(Vec<[f64; 2]>),
}

impl Column {
    fn get(&self, r: usize) -> Option<Value> {
        match self {
            Column::Scalar(v) if v[r].is_nan() => None,
            Column::Scalar(v) => Some(Value::Scalar(v[r])),
            Column::Vector(v) if v[r][0].is_nan() => None,
            Column::Vector(v) => Some(Value::Vector(v[r])),
        }
    }

    fn bits_hash(&self, ty: AspType) -> u64 {
        let mut h = DefaultHasher::new();
        ty.to_string().hash(&mut h);
        match self {
            Column::Scalar(v) => v.iter().for_each(|x| x.to_bits().hash(&mut h)),
            Column::Vector(v) => v.iter().for_each(|x| {
                x[0].to_bits().hash(&mut h);
                x[1].to_bits().hash(&mut h);
            }),
        }
        h.finish()
    }

    fn same_bits(&self, other: &Column) -> bool {
        match (self, other) {
            (Column::Scalar(a), Column::Scalar(b)) => {
                a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
            }
            (Column::Vector(a), Column::Vector(b)) => a.iter().zip(b).all(|(x, y)| {
                x[0].to_bits() == y[0].to_bits() && x[1].to_bits() == y[1].to_bits()
            }),
            _ => false,
        }
    }
}

/// Which expressions of the deepest level are kept.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LastLevel {
    All,
    /// Only scalars, the only type a threshold literal can use.
    Scalars,
}

/// Every well-typed expression up to a depth, each with its values on a
/// fixed list of world states. Errors and missing inputs become NaN.
#[derive(Clone, Debug)]
pub struct FeatureBank {
    pub exprs: Vec<Expr>,
    pub types: Vec<AspType>,
    pub depths: Vec<usize>,
    cols: Vec<Column>,
    states: Vec<Arc<WorldState>>,
    /// Row of each state, keyed by the address of its shared allocation.
    rows: HashMap<usize, usize>,
}

struct Builder<'a> {
    bank: FeatureBank,
    seen: HashMap<u64, Vec<usize>>,
    dedup: bool,
    budget: usize,
    dom: &'a DomainDefinition,
}

impl Builder<'_> {
    fn push(&mut self, expr: Expr, ty: AspType, depth: usize, col: Column) -> Result<(), SynthError> {
        if self.dedup {
            let h = col.bits_hash(ty);
            let bucket = self.seen.entry(h).or_default();
            if bucket
                .iter()
                .any(|&i| self.bank.types[i] == ty && self.bank.cols[i].same_bits(&col))
            {
                return Ok(());
            }
            bucket.push(self.bank.exprs.len());
        }
        if self.bank.exprs.len() >= self.budget {
            return Err(SynthError::BudgetExceeded(self.budget));
        }
        self.bank.exprs.push(expr);
        self.bank.types.push(ty);
        self.bank.depths.push(depth);
        self.bank.cols.push(col);
        Ok(())
    }

    fn column(&self, ty: AspType, f: impl Fn(usize) -> Option<Value>) -> Column {
        let n = self.bank.states.len();
        match ty {
            AspType::Vector(_) => Column::Vector(
                (0..n)
                    .map(|r| f(r).and_then(Value::as_vector).unwrap_or(NAN2))
                    .collect(),
            ),
            _ => Column::Scalar(
                (0..n)
                    .map(|r| f(r).and_then(Value::as_scalar).unwrap_or(f64::NAN))
                    .collect(),
            ),
        }
    }

    fn level(&mut self, d: usize, keep: impl Fn(AspType) -> bool) -> Result<(), SynthError> {
        let below = self.bank.exprs.len();
        let fresh = |i: usize, b: &FeatureBank| b.depths[i] + 1 == d;
        for (op, sig) in &self.dom.unary_ops {
            for i in 0..below {
                if !fresh(i, &self.bank) {
                    continue;
                }
                let Some(ty) = sig.apply(&[self.bank.types[i]]) else {
                    continue;
                };
                if !keep(ty) {
                    continue;
                }
                let states = &self.bank.states;
                let arg = &self.bank.cols[i];
                let col = self.column(ty, |r| apply_unary(*op, arg.get(r)?, &states[r]).ok());
                let e = Expr::unary(*op, self.bank.exprs[i].clone());
                self.push(e, ty, d, col)?;
            }
        }
        let binary: Vec<(BinaryOp, Option<&crate::lang::Signature>)> = self
            .dom
            .binary_ops
            .iter()
            .map(|(op, s)| (*op, Some(s)))
            .chain(self.dom.enumerated_arithmetic.iter().map(|op| (*op, None)))
            .collect();
        for (op, sig) in binary {
            for i in 0..below {
                let start = if op.is_commutative() { i + 1 } else { 0 };
                for j in start..below {
                    if i == j || !(fresh(i, &self.bank) || fresh(j, &self.bank)) {
                        continue;
                    }
                    let (ti, tj) = (self.bank.types[i], self.bank.types[j]);
                    let ty = match sig {
                        Some(s) => s.apply(&[ti, tj]),
                        None => arithmetic_type(op, ti, tj).ok(),
                    };
                    let Some(ty) = ty else { continue };
                    if !keep(ty) {
                        continue;
                    }
                    let (a, b) = (&self.bank.cols[i], &self.bank.cols[j]);
                    let col = self.column(ty, |r| apply_binary(op, a.get(r)?, b.get(r)?).ok());
                    let e = Expr::binary(op, self.bank.exprs[i].clone(), self.bank.exprs[j].clone());
                    self.push(e, ty, d, col)?;
                }
            }
        }
        Ok(())
    }
}

impl FeatureBank {
    /// Enumerates expressions up to `depth` over `states`. Expressions that
    /// agree bit for bit on every state are kept once (the first enumerated,
    /// which is never deeper); with no states nothing is deduplicated.
    /// Boolean inputs are skipped since no operator or literal consumes them.
    pub fn build(
        dom: &DomainDefinition,
        states: &[Arc<WorldState>],
        depth: usize,
        last: LastLevel,
        budget: usize,
    ) -> Result<Self, SynthError> {
        let mut uniq = Vec::new();
        let mut rows = HashMap::new();
        for s in states {
            let k = Arc::as_ptr(s) as usize;
            if let std::collections::hash_map::Entry::Vacant(e) = rows.entry(k) {
                e.insert(uniq.len());
                uniq.push(s.clone());
            }
        }
        let mut b = Builder {
            bank: FeatureBank {
                exprs: Vec::new(),
                types: Vec::new(),
                depths: Vec::new(),
                cols: Vec::new(),
                states: uniq,
                rows,
            },
            seen: HashMap::new(),
            dedup: !states.is_empty(),
            budget,
            dom,
        };
        for (name, ty) in &dom.inputs {
            if *ty == AspType::Bool {
                continue;
            }
            if depth == 0 && last == LastLevel::Scalars && !matches!(ty, AspType::Scalar(_)) {
                continue;
            }
            let col = b.column(*ty, |r| b.bank.states[r].get(name).filter(|v| v.fits(*ty)));
            b.push(Expr::input(name, *ty), *ty, 0, col)?;
        }
        for d in 1..=depth {
            let scalars_only = d == depth && last == LastLevel::Scalars;
            b.level(d, |t| !scalars_only || matches!(t, AspType::Scalar(_)))?;
        }
        Ok(b.bank)
    }

    pub fn len(&self) -> usize {
        self.exprs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exprs.is_empty()
    }

    pub fn row(&self, w: &Arc<WorldState>) -> Option<usize> {
        self.rows.get(&(Arc::as_ptr(w) as usize)).copied()
    }

    pub fn n_rows(&self) -> usize {
        self.states.len()
    }

    /// Values of a scalar expression on every state.
    pub fn scalar(&self, i: usize) -> Option<&[f64]> {
        match &self.cols[i] {
            Column::Scalar(v) => Some(v),
            Column::Vector(_) => None,
        }
    }

    /// A bank of length-valued columns over anonymous rows, for tests.
    #[cfg(test)]
    pub(crate) fn from_columns(cols: Vec<Vec<f64>>) -> Self {
        let n = cols.len();
        let ty = AspType::Scalar(crate::dim::Dimension::LENGTH);
        FeatureBank {
            exprs: (0..n).map(|i| Expr::input(&format!("f{i}"), ty)).collect(),
            types: vec![ty; n],
            depths: vec![0; n],
            cols: cols.into_iter().map(Column::Scalar).collect(),
            states: Vec::new(),
            rows: HashMap::new(),
        }
    }

    /// Indices of the scalar expressions.
    pub fn scalar_features(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| matches!(self.types[i], AspType::Scalar(_)))
            .collect()
    }
}

/// Every well-typed expression of type `target` up to `depth`, deduplicated
/// by observational equivalence on `examples`.
pub fn enum_exprs(
    dom: &DomainDefinition,
    target: AspType,
    depth: usize,
    examples: &[Arc<WorldState>],
    budget: usize,
) -> Result<Vec<Expr>, SynthError> {
    let bank = FeatureBank::build(dom, examples, depth, LastLevel::All, budget)?;
    Ok(bank
        .exprs
        .into_iter()
        .zip(bank.types)
        .filter(|(_, t)| *t == target)
        .map(|(e, _)| e)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dim::Dimension;
    use crate::lang::print_expr;

    #[test]
    fn depth_one_lengths() {
        let dom = DomainDefinition::social();
        let got: Vec<String> = enum_exprs(&dom, AspType::Scalar(Dimension::LENGTH), 1, &[], 100_000)
            .unwrap()
            .iter()
            .map(print_expr)
            .collect();
        for want in ["norm(p_h)", "dist(p_h, p_hl)", "p_g.x"] {
            assert!(got.iter().any(|g| g == want), "{want} missing");
        }
        assert!(!got.iter().any(|g| g == "angle(p_h)"));
    }

    #[test]
    fn depth_zero_is_inputs() {
        let dom = DomainDefinition::social();
        let v = enum_exprs(&dom, AspType::Vector(Dimension::VELOCITY), 0, &[], 100).unwrap();
        assert_eq!(v.len(), 4);
        assert!(v.iter().all(|e| matches!(e, Expr::Input { .. })));
        assert!(enum_exprs(&dom, AspType::Scalar(Dimension::LENGTH), 0, &[], 100)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn budget_is_enforced() {
        let dom = DomainDefinition::social();
        assert_eq!(
            enum_exprs(&dom, AspType::Scalar(Dimension::LENGTH), 2, &[], 50).unwrap_err(),
            SynthError::BudgetExceeded(50)
        );
    }

    #[test]
    fn equivalent_expressions_collapse() {
        let dom = DomainDefinition::social();
        let w = Arc::new(
            dom.inputs
                .iter()
                .fold(WorldState::new(), |w, (n, t)| match t {
                    AspType::Vector(_) => w.with(n, Value::Vector([1.0, 2.0])),
                    _ => w.with(n, Value::Scalar(0.5)),
                }),
        );
        // All vectors are equal, so one input of each type survives.
        let v = enum_exprs(&dom, AspType::Vector(Dimension::LENGTH), 0, &[w], 100).unwrap();
        assert_eq!(v.len(), 1);
    }
}
