//! Compiled constraint systems over per-parameter candidate grids.
//!
//! Every leaf `observed ⋈ θ` is true on a contiguous run of a parameter's
//! sorted candidate list, so leaf truth reduces to an index comparison.

use crate::eval::ResidualFormula;
use crate::lang::Relation;

#[derive(Clone, Debug)]
enum Node {
    Const(bool),
    /// `gt`: true for candidate indices `< bound`; otherwise true for `>= bound`.
    Leaf { param: usize, bound: usize, gt: bool },
    And(usize, usize),
    Or(usize, usize),
}

#[derive(Clone, Debug)]
pub(super) struct Compiled {
    nodes: Vec<Node>,
    root: usize,
    pub target: bool,
    pub weight: f64,
    /// Leaves per parameter.
    leaf_count: Vec<u32>,
}

fn leaf_bound(cands: &[f64], observed: f64, rel: Relation) -> usize {
    match rel {
        // observed > θ  ⇔  θ < observed
        Relation::Gt => cands.partition_point(|c| *c < observed),
        // observed < θ  ⇔  θ > observed
        Relation::Lt => cands.partition_point(|c| *c <= observed),
    }
}

impl Compiled {
    pub fn new(
        formula: &ResidualFormula,
        target: bool,
        weight: f64,
        param_index: &dyn Fn(&str) -> usize,
        cands: &[Vec<f64>],
    ) -> Self {
        let mut c = Compiled {
            nodes: Vec::new(),
            root: 0,
            target,
            weight,
            leaf_count: vec![0; cands.len()],
        };
        c.root = c.push(formula, param_index, cands);
        c
    }

    fn push(
        &mut self,
        f: &ResidualFormula,
        param_index: &dyn Fn(&str) -> usize,
        cands: &[Vec<f64>],
    ) -> usize {
        let node = match f {
            ResidualFormula::Const(b) => Node::Const(*b),
            ResidualFormula::Leaf {
                observed,
                rel,
                param,
            } => {
                if observed.is_nan() {
                    Node::Const(false)
                } else {
                    let p = param_index(param);
                    self.leaf_count[p] += 1;
                    Node::Leaf {
                        param: p,
                        bound: leaf_bound(&cands[p], *observed, *rel),
                        gt: *rel == Relation::Gt,
                    }
                }
            }
            ResidualFormula::And(a, b) => {
                let a = self.push(a, param_index, cands);
                let b = self.push(b, param_index, cands);
                Node::And(a, b)
            }
            ResidualFormula::Or(a, b) => {
                let a = self.push(a, param_index, cands);
                let b = self.push(b, param_index, cands);
                Node::Or(a, b)
            }
        };
        self.nodes.push(node);
        self.nodes.len() - 1
    }

    pub fn leaves_on(&self, param: usize) -> u32 {
        self.leaf_count[param]
    }

    /// Three-valued evaluation; `None` when an unassigned parameter matters.
    pub fn eval3(&self, assign: &[Option<usize>]) -> Option<bool> {
        self.eval3_at(self.root, assign)
    }

    fn eval3_at(&self, i: usize, assign: &[Option<usize>]) -> Option<bool> {
        match self.nodes[i] {
            Node::Const(b) => Some(b),
            Node::Leaf { param, bound, gt } => {
                assign[param].map(|k| if gt { k < bound } else { k >= bound })
            }
            Node::And(a, b) => match (self.eval3_at(a, assign), self.eval3_at(b, assign)) {
                (Some(false), _) | (_, Some(false)) => Some(false),
                (Some(true), Some(true)) => Some(true),
                _ => None,
            },
            Node::Or(a, b) => match (self.eval3_at(a, assign), self.eval3_at(b, assign)) {
                (Some(true), _) | (_, Some(true)) => Some(true),
                (Some(false), Some(false)) => Some(false),
                _ => None,
            },
        }
    }

    /// Evaluation with every leaf on `param` forced to `forced`.
    pub fn eval_forced(&self, assign: &[Option<usize>], param: usize, forced: bool) -> bool {
        self.eval_forced_at(self.root, assign, param, forced)
    }

    fn eval_forced_at(&self, i: usize, assign: &[Option<usize>], p: usize, forced: bool) -> bool {
        match self.nodes[i] {
            Node::Const(b) => b,
            Node::Leaf { param, bound, gt } => {
                if param == p {
                    forced
                } else {
                    let k = assign[param].expect("outer parameters assigned");
                    if gt {
                        k < bound
                    } else {
                        k >= bound
                    }
                }
            }
            Node::And(a, b) => {
                self.eval_forced_at(a, assign, p, forced) && self.eval_forced_at(b, assign, p, forced)
            }
            Node::Or(a, b) => {
                self.eval_forced_at(a, assign, p, forced) || self.eval_forced_at(b, assign, p, forced)
            }
        }
    }

    /// Candidate index range on which the single leaf over `param` is true.
    pub fn true_range(&self, param: usize, n_cands: usize) -> Option<(usize, usize)> {
        self.nodes.iter().find_map(|n| match *n {
            Node::Leaf {
                param: q,
                bound,
                gt,
            } if q == param => Some(if gt { (0, bound) } else { (bound, n_cands) }),
            _ => None,
        })
    }
}

/// Weight of every candidate of `last`, given all other parameters assigned.
pub(super) fn sweep_last(
    constraints: &[Compiled],
    assign: &mut [Option<usize>],
    last: usize,
    n_cands: usize,
    out: &mut Vec<f64>,
) {
    out.clear();
    out.resize(n_cands + 1, 0.0);
    let mut base = 0.0;
    for c in constraints {
        match c.leaves_on(last) {
            0 => {
                if c.eval_forced(assign, last, false) == c.target {
                    base += c.weight;
                }
            }
            1 => {
                let sf = (c.eval_forced(assign, last, false) == c.target) as u8 as f64;
                let st = (c.eval_forced(assign, last, true) == c.target) as u8 as f64;
                base += c.weight * sf;
                let delta = c.weight * (st - sf);
                if delta != 0.0 {
                    let (lo, hi) = c.true_range(last, n_cands).expect("leaf present");
                    out[lo] += delta;
                    out[hi] -= delta;
                }
            }
            _ => {
                // Several leaves on the same parameter: evaluate per candidate.
                for k in 0..n_cands {
                    assign[last] = Some(k);
                    if c.eval3(assign) == Some(c.target) {
                        out[k] += c.weight;
                        out[k + 1] -= c.weight;
                    }
                }
                assign[last] = None;
            }
        }
    }
    let mut run = base;
    for k in 0..n_cands {
        run += out[k];
        out[k] = run;
    }
    out.truncate(n_cands);
}
