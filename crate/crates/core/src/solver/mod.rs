//! Exact maximum-satisfaction search over threshold parameters.
//!
//! Every residual leaf has the form `observed ⋈ θ`, so the number of
//! satisfied constraints is piecewise constant in each θ with breakpoints at
//! the observed values only. Picking one representative per cell of that
//! partition makes a finite grid on which exhaustive search is exact.
//!
//! Residual formulas contain no negation, so each formula is monotone in
//! every leaf. That lets [`max_sat`] drop cells that are dominated by a
//! neighbouring cell before searching.

mod grid;
pub mod oracle;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::dim::Dimension;
use crate::error::SolveError;
use crate::eval::ResidualConstraint;
use crate::lang::Relation;

use grid::{sweep_last, Compiled};

#[derive(Clone, Debug, PartialEq)]
pub struct ParamSpec {
    pub name: String,
    pub dim: Dimension,
    /// Current value θ₀, if any.
    pub prior: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeightedConstraint {
    pub constraint: ResidualConstraint,
    pub weight: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SolveInstance {
    pub params: Vec<ParamSpec>,
    pub constraints: Vec<WeightedConstraint>,
}

impl SolveInstance {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn param(mut self, name: &str, dim: Dimension, prior: Option<f64>) -> Self {
        self.params.push(ParamSpec {
            name: name.to_string(),
            dim,
            prior,
        });
        self
    }

    pub fn push(&mut self, constraint: ResidualConstraint, weight: f64) {
        self.constraints.push(WeightedConstraint { constraint, weight });
    }

    pub fn total_weight(&self) -> f64 {
        self.constraints.iter().map(|c| c.weight).sum()
    }

    fn index(&self) -> HashMap<&str, usize> {
        self.params
            .iter()
            .enumerate()
            .map(|(i, p)| (p.name.as_str(), i))
            .collect()
    }

    fn validate(&self, cfg: &SolverConfig) -> Result<(), SolveError> {
        if self.params.len() > cfg.max_params {
            return Err(SolveError::TooManyParams {
                count: self.params.len(),
                max: cfg.max_params,
            });
        }
        let idx = self.index();
        let mut unknown = None;
        for c in &self.constraints {
            c.constraint.formula.leaves(&mut |_, _, p| {
                if !idx.contains_key(p) && unknown.is_none() {
                    unknown = Some(p.to_string());
                }
            });
        }
        match unknown {
            Some(p) => Err(SolveError::UnknownParam(p)),
            None => Ok(()),
        }
    }

    /// Re-evaluates every constraint under `assignment`.
    pub fn evaluate(&self, assignment: &BTreeMap<String, f64>) -> (f64, usize) {
        let get = |n: &str| assignment.get(n).copied();
        let mut w = 0.0;
        let mut n = 0;
        for c in &self.constraints {
            if c.constraint.satisfied(&get) {
                w += c.weight;
                n += 1;
            }
        }
        (w, n)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub assignment: BTreeMap<String, f64>,
    pub satisfied_weight: f64,
    pub satisfied_count: usize,
    /// False when the minimal-change search ran out of budget and fell back
    /// to a reduced grid (satisfaction is still optimal).
    pub exact: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub max_params: usize,
    /// Cap on inner sweeps for the minimal-change search before it falls back
    /// to the pruned grid.
    pub srtr_sweep_budget: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_params: 4,
            srtr_sweep_budget: 400_000,
        }
    }
}

#[derive(Clone, Copy, Default)]
struct Pref {
    lower: bool,
    higher: bool,
}

/// Distinct finite observed values per parameter, each with the direction a
/// threshold move across it is never harmful.
fn observations(inst: &SolveInstance) -> Vec<Vec<(f64, Pref)>> {
    let idx = inst.index();
    let mut raw: Vec<Vec<(f64, Pref)>> = vec![Vec::new(); inst.params.len()];
    for c in &inst.constraints {
        let target = c.constraint.target;
        c.constraint.formula.leaves(&mut |obs, rel, p| {
            if !obs.is_finite() {
                return;
            }
            // Crossing `obs` downwards turns `obs > θ` true and `obs < θ` false.
            let down_good = matches!((rel, target), (Relation::Gt, true) | (Relation::Lt, false));
            let mut pref = Pref::default();
            if down_good {
                pref.lower = true;
            } else {
                pref.higher = true;
            }
            raw[idx[p]].push((obs, pref));
        });
    }
    for v in &mut raw {
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, Pref)> = Vec::with_capacity(v.len());
        for &(x, p) in v.iter() {
            match merged.last_mut() {
                Some(last) if last.0 == x => {
                    last.1.lower |= p.lower;
                    last.1.higher |= p.higher;
                }
                _ => merged.push((x, p)),
            }
        }
        *v = merged;
    }
    raw
}

fn cell_rep(vals: &[(f64, Pref)], j: usize) -> f64 {
    let n = vals.len();
    if j == 0 {
        vals[0].0 - 1.0
    } else if j == n {
        vals[n - 1].0 + 1.0
    } else {
        0.5 * (vals[j - 1].0 + vals[j].0)
    }
}

fn full_grid(vals: &[(f64, Pref)], prior: Option<f64>) -> Vec<f64> {
    let mut out: Vec<f64> = if vals.is_empty() {
        Vec::new()
    } else {
        (0..=vals.len()).map(|j| cell_rep(vals, j)).collect()
    };
    match prior {
        // A prior sitting exactly on a breakpoint is not a cell representative.
        Some(t) if t.is_finite() && !vals.iter().any(|v| v.0 == t) => out.push(t),
        _ => {}
    }
    if out.is_empty() {
        out.push(prior.filter(|t| t.is_finite()).unwrap_or(0.0));
    }
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

/// Representatives of the cells that are not dominated by a neighbour.
fn pruned_grid(vals: &[(f64, Pref)], prior: Option<f64>) -> Vec<f64> {
    let n = vals.len();
    if n == 0 {
        return vec![prior.filter(|t| t.is_finite()).unwrap_or(0.0)];
    }
    (0..=n)
        .filter(|&j| {
            let dominated_down = j >= 1 && vals[j - 1].1.lower && !vals[j - 1].1.higher;
            let dominated_up = j < n && vals[j].1.higher && !vals[j].1.lower;
            !(dominated_down || dominated_up)
        })
        .map(|j| cell_rep(vals, j))
        .collect()
}

/// Candidate thresholds per parameter: midpoints between consecutive distinct
/// observed values, one value below the minimum and one above the maximum,
/// plus the prior when given.
pub fn candidates(inst: &SolveInstance) -> BTreeMap<String, Vec<f64>> {
    let obs = observations(inst);
    inst.params
        .iter()
        .zip(&obs)
        .map(|(p, v)| (p.name.clone(), full_grid(v, p.prior)))
        .collect()
}

struct Search<'a> {
    inst: &'a SolveInstance,
    grids: Vec<Vec<f64>>,
    compiled: Vec<Compiled>,
    /// Outer parameters in search order; `last` is swept.
    outer: Vec<usize>,
    last: usize,
    total: f64,
}

impl<'a> Search<'a> {
    fn new(inst: &'a SolveInstance, grids: Vec<Vec<f64>>) -> Self {
        let idx = inst.index();
        let lookup = |n: &str| idx[n];
        let compiled: Vec<Compiled> = inst
            .constraints
            .iter()
            .map(|c| {
                Compiled::new(
                    &c.constraint.formula,
                    c.constraint.target,
                    c.weight,
                    &lookup,
                    &grids,
                )
            })
            .collect();
        // Sweep the parameter with the most candidates.
        let last = (0..grids.len())
            .max_by_key(|&i| (grids[i].len(), std::cmp::Reverse(i)))
            .unwrap_or(0);
        let outer = (0..grids.len()).filter(|&i| i != last).collect();
        Search {
            inst,
            grids,
            compiled,
            outer,
            last,
            total: inst.total_weight(),
        }
    }

    fn upper_bound(&self, assign: &[Option<usize>]) -> f64 {
        let mut lost = 0.0;
        for c in &self.compiled {
            if let Some(v) = c.eval3(assign) {
                if v != c.target {
                    lost += c.weight;
                }
            }
        }
        self.total - lost
    }

    fn assignment(&self, assign: &[Option<usize>]) -> BTreeMap<String, f64> {
        self.inst
            .params
            .iter()
            .enumerate()
            .map(|(i, p)| (p.name.clone(), self.grids[i][assign[i].unwrap()]))
            .collect()
    }
}

fn tol(total: f64) -> f64 {
    1e-9 * total.abs().max(1.0)
}

fn finish(inst: &SolveInstance, assignment: BTreeMap<String, f64>, exact: bool) -> SolveResult {
    let (satisfied_weight, satisfied_count) = inst.evaluate(&assignment);
    SolveResult {
        assignment,
        satisfied_weight,
        satisfied_count,
        exact,
    }
}

/// Assignment maximizing the total satisfied weight. Ties go to the first
/// optimum in grid order (smaller thresholds first).
pub fn max_sat(inst: &SolveInstance, cfg: &SolverConfig) -> Result<SolveResult, SolveError> {
    inst.validate(cfg)?;
    if inst.params.is_empty() {
        return Ok(finish(inst, BTreeMap::new(), true));
    }
    let obs = observations(inst);
    let grids = inst
        .params
        .iter()
        .zip(&obs)
        .map(|(p, v)| pruned_grid(v, p.prior))
        .collect();
    let s = Search::new(inst, grids);
    let eps = tol(s.total);

    struct St {
        best_w: f64,
        best: Option<Vec<Option<usize>>>,
        sweep: Vec<f64>,
    }
    fn dfs(s: &Search, depth: usize, assign: &mut Vec<Option<usize>>, st: &mut St, eps: f64) {
        if st.best.is_some() && s.upper_bound(assign) <= st.best_w + eps {
            return;
        }
        if depth == s.outer.len() {
            let n = s.grids[s.last].len();
            sweep_last(&s.compiled, assign, s.last, n, &mut st.sweep);
            for k in 0..n {
                if st.best.is_none() || st.sweep[k] > st.best_w + eps {
                    st.best_w = st.sweep[k];
                    let mut a = assign.clone();
                    a[s.last] = Some(k);
                    st.best = Some(a);
                }
            }
            return;
        }
        let p = s.outer[depth];
        for k in 0..s.grids[p].len() {
            assign[p] = Some(k);
            dfs(s, depth + 1, assign, st, eps);
        }
        assign[p] = None;
    }

    let mut st = St {
        best_w: f64::NEG_INFINITY,
        best: None,
        sweep: Vec::new(),
    };
    let mut assign = vec![None; inst.params.len()];
    dfs(&s, 0, &mut assign, &mut st, eps);
    let best = st.best.expect("grid is never empty");
    Ok(finish(inst, s.assignment(&best), true))
}

fn change(value: f64, prior: Option<f64>) -> f64 {
    match prior {
        Some(t) if t.is_finite() => (value - t).abs() / t.abs().max(1.0),
        _ => 0.0,
    }
}

/// Among the assignments with maximal satisfied weight, the one closest to the
/// priors under Σ |θ−θ₀| / max(|θ₀|, 1). Remaining ties go to the
/// lexicographically smaller assignment. Parameters without a prior are free.
pub fn srtr_optimize(inst: &SolveInstance, cfg: &SolverConfig) -> Result<SolveResult, SolveError> {
    let best = max_sat(inst, cfg)?;
    if inst.params.is_empty() {
        return Ok(best);
    }
    let obs = observations(inst);
    let full: Vec<Vec<f64>> = inst
        .params
        .iter()
        .zip(&obs)
        .map(|(p, v)| full_grid(v, p.prior))
        .collect();
    if let Some(r) = closest_optimum(inst, full, best.satisfied_weight, cfg.srtr_sweep_budget) {
        return Ok(finish(inst, r, true));
    }
    // Budget exhausted: search the dominance-pruned grid plus the cells
    // around each prior, which still contains a maximal assignment.
    let reduced = inst
        .params
        .iter()
        .zip(&obs)
        .map(|(p, v)| {
            let mut g = pruned_grid(v, p.prior);
            let f = full_grid(v, p.prior);
            if let Some(t) = p.prior.filter(|t| t.is_finite()) {
                let i = f.partition_point(|c| *c < t);
                for j in i.saturating_sub(1)..(i + 2).min(f.len()) {
                    g.push(f[j]);
                }
            }
            g.sort_by(f64::total_cmp);
            g.dedup();
            g
        })
        .collect();
    let r = closest_optimum(inst, reduced, best.satisfied_weight, usize::MAX)
        .expect("unbounded search completes");
    Ok(finish(inst, r, false))
}

fn closest_optimum(
    inst: &SolveInstance,
    grids: Vec<Vec<f64>>,
    target_w: f64,
    budget: usize,
) -> Option<BTreeMap<String, f64>> {
    let s = Search::new(inst, grids);
    let eps = tol(s.total);
    let dist: Vec<Vec<f64>> = s
        .grids
        .iter()
        .zip(&inst.params)
        .map(|(g, p)| g.iter().map(|&v| change(v, p.prior)).collect())
        .collect();
    // Outer candidates visited nearest-first so distance pruning can stop early.
    let order: Vec<Vec<usize>> = dist
        .iter()
        .map(|d| {
            let mut o: Vec<usize> = (0..d.len()).collect();
            o.sort_by(|&a, &b| d[a].total_cmp(&d[b]).then(a.cmp(&b)));
            o
        })
        .collect();

    struct St {
        best_d: f64,
        best: Option<Vec<f64>>,
        sweeps: usize,
        sweep: Vec<f64>,
    }
    struct Ctx<'s, 'a> {
        s: &'s Search<'a>,
        dist: Vec<Vec<f64>>,
        order: Vec<Vec<usize>>,
        target_w: f64,
        eps: f64,
        budget: usize,
    }
    fn better(d: f64, vals: &[f64], st: &St) -> bool {
        match &st.best {
            None => true,
            Some(b) => {
                if d < st.best_d - 1e-12 {
                    true
                } else if d > st.best_d + 1e-12 {
                    false
                } else {
                    vals.iter()
                        .zip(b)
                        .map(|(x, y)| x.total_cmp(y))
                        .find(|o| o.is_ne())
                        .is_some_and(|o| o.is_lt())
                }
            }
        }
    }
    fn dfs(c: &Ctx, depth: usize, d: f64, assign: &mut Vec<Option<usize>>, st: &mut St) -> bool {
        if c.s.upper_bound(assign) < c.target_w - c.eps {
            return true;
        }
        let s = c.s;
        if depth == s.outer.len() {
            st.sweeps += 1;
            if st.sweeps > c.budget {
                return false;
            }
            let n = s.grids[s.last].len();
            sweep_last(&s.compiled, assign, s.last, n, &mut st.sweep);
            for k in 0..n {
                if st.sweep[k] < c.target_w - c.eps {
                    continue;
                }
                let total = d + c.dist[s.last][k];
                let mut a = assign.clone();
                a[s.last] = Some(k);
                let vals: Vec<f64> = (0..a.len()).map(|i| s.grids[i][a[i].unwrap()]).collect();
                if better(total, &vals, st) {
                    st.best_d = total;
                    st.best = Some(vals);
                }
            }
            return true;
        }
        let p = s.outer[depth];
        for &k in &c.order[p] {
            let nd = d + c.dist[p][k];
            if st.best.is_some() && nd > st.best_d + 1e-12 {
                break;
            }
            assign[p] = Some(k);
            if !dfs(c, depth + 1, nd, assign, st) {
                return false;
            }
        }
        assign[p] = None;
        true
    }

    let ctx = Ctx {
        s: &s,
        dist,
        order,
        target_w,
        eps,
        budget,
    };
    let mut st = St {
        best_d: f64::INFINITY,
        best: None,
        sweeps: 0,
        sweep: Vec::new(),
    };
    let mut assign = vec![None; inst.params.len()];
    if !dfs(&ctx, 0, 0.0, &mut assign, &mut st) {
        return None;
    }
    let vals = st.best?;
    Some(
        inst.params
            .iter()
            .zip(vals)
            .map(|(p, v)| (p.name.clone(), v))
            .collect(),
    )
}
