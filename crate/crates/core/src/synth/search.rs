//! Layered completion of predicate sketches.
//!
//! A sketch is a predicate whose `?pred` holes are filled with small
//! formulas over threshold literals. Layer `L` tries every fill with `L` new
//! literals in total. Thresholds come from the exact solver, so a candidate
//! is scored at its best parameter values. Layer 1 draws literals from the
//! whole feature bank; deeper layers draw them from a beam of promising
//! single literals.

use std::collections::BTreeSet;

use rayon::prelude::*;

use super::bank::FeatureBank;
use super::{Candidate, SynthConfig};
use crate::error::SynthError;
use crate::eval::{eval_expr, eval_predicate, score, Example, ResidualConstraint, ResidualFormula};
use crate::lang::{print_predicate, Param, Predicate, Relation, Value};
use crate::solver::{max_sat, SolveInstance};

/// A sketch folded against one example: holes stay symbolic.
#[derive(Clone, Debug)]
enum Skel {
    Const(bool),
    Hole(usize),
    /// Literal of the sketch whose parameter is blank.
    Leaf(f64, Relation, usize),
    And(Box<Skel>, Box<Skel>),
    Or(Box<Skel>, Box<Skel>),
}

impl Skel {
    fn and(a: Skel, b: Skel) -> Skel {
        match (a, b) {
            (Skel::Const(false), _) | (_, Skel::Const(false)) => Skel::Const(false),
            (Skel::Const(true), x) | (x, Skel::Const(true)) => x,
            (a, b) => Skel::And(Box::new(a), Box::new(b)),
        }
    }

    fn or(a: Skel, b: Skel) -> Skel {
        match (a, b) {
            (Skel::Const(true), _) | (_, Skel::Const(true)) => Skel::Const(true),
            (Skel::Const(false), x) | (x, Skel::Const(false)) => x,
            (a, b) => Skel::Or(Box::new(a), Box::new(b)),
        }
    }

    fn build(p: &Predicate, ex: &Example, holes: &mut usize, blanks: &[String]) -> Skel {
        if !p.has_blank() {
            return Skel::Const(eval_predicate(p, &ex.prev, &ex.world).unwrap_or(false));
        }
        match p {
            Predicate::Blank => {
                *holes += 1;
                Skel::Hole(*holes - 1)
            }
            Predicate::Cmp { rel, expr, param } => {
                let v = eval_expr(expr, &ex.world)
                    .ok()
                    .and_then(Value::as_scalar)
                    .unwrap_or(f64::NAN);
                let k = blanks.iter().position(|b| *b == param.name).unwrap();
                Skel::Leaf(v, *rel, k)
            }
            Predicate::And(a, b) => {
                let a = Skel::build(a, ex, holes, blanks);
                Skel::and(a, Skel::build(b, ex, holes, blanks))
            }
            Predicate::Or(a, b) => {
                let a = Skel::build(a, ex, holes, blanks);
                Skel::or(a, Skel::build(b, ex, holes, blanks))
            }
            _ => unreachable!("no blanks below"),
        }
    }

    fn is_const(&self) -> bool {
        matches!(self, Skel::Const(_))
    }
}

/// Fill shapes for one hole; literal slots are numbered left to right.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Shape {
    True,
    False,
    Lit,
    And2,
    Or2,
    And3,
    Or3,
    /// `(l1 && l2) || l3`
    OrAnd,
    /// `(l1 || l2) && l3`
    AndOr,
}

impl Shape {
    fn literals(self) -> usize {
        match self {
            Shape::True | Shape::False => 0,
            Shape::Lit => 1,
            Shape::And2 | Shape::Or2 => 2,
            _ => 3,
        }
    }

    fn with_literals(n: usize) -> &'static [Shape] {
        match n {
            0 => &[Shape::True, Shape::False],
            1 => &[Shape::Lit],
            2 => &[Shape::And2, Shape::Or2],
            3 => &[Shape::And3, Shape::Or3, Shape::OrAnd, Shape::AndOr],
            _ => &[],
        }
    }

    /// Literal slots that are interchangeable, as index ranges within the
    /// shape (enumerated in increasing pool order).
    fn symmetric(self) -> &'static [(usize, usize)] {
        match self {
            Shape::And2 | Shape::Or2 => &[(0, 2)],
            Shape::And3 | Shape::Or3 => &[(0, 3)],
            Shape::OrAnd | Shape::AndOr => &[(0, 2)],
            _ => &[],
        }
    }

    fn build<T>(self, lit: &mut impl FnMut(usize) -> T, and: fn(T, T) -> T, or: fn(T, T) -> T, k: impl Fn(bool) -> T) -> T {
        match self {
            Shape::True => k(true),
            Shape::False => k(false),
            Shape::Lit => lit(0),
            Shape::And2 => and(lit(0), lit(1)),
            Shape::Or2 => or(lit(0), lit(1)),
            Shape::And3 => and(and(lit(0), lit(1)), lit(2)),
            Shape::Or3 => or(or(lit(0), lit(1)), lit(2)),
            Shape::OrAnd => or(and(lit(0), lit(1)), lit(2)),
            Shape::AndOr => and(or(lit(0), lit(1)), lit(2)),
        }
    }
}

fn pred_and(a: Predicate, b: Predicate) -> Predicate {
    match (a, b) {
        (Predicate::False, _) | (_, Predicate::False) => Predicate::False,
        (Predicate::True, x) | (x, Predicate::True) => x,
        (a, b) => Predicate::and(a, b),
    }
}

fn pred_or(a: Predicate, b: Predicate) -> Predicate {
    match (a, b) {
        (Predicate::True, _) | (_, Predicate::True) => Predicate::True,
        (Predicate::False, x) | (x, Predicate::False) => x,
        (a, b) => Predicate::or(a, b),
    }
}

/// Replaces the holes of `sketch` in order. Connectives of the sketch that
/// contain a hole fold constant operands; subtrees without holes are kept
/// verbatim.
pub(crate) fn instantiate(sketch: &Predicate, fills: &mut impl FnMut(usize) -> Predicate) -> Predicate {
    fn go(p: &Predicate, k: &mut usize, fills: &mut dyn FnMut(usize) -> Predicate) -> Predicate {
        if p.blank_count() == 0 {
            return p.clone();
        }
        match p {
            Predicate::Blank => {
                *k += 1;
                fills(*k - 1)
            }
            Predicate::And(a, b) => {
                let a = go(a, k, fills);
                pred_and(a, go(b, k, fills))
            }
            Predicate::Or(a, b) => {
                let a = go(a, k, fills);
                pred_or(a, go(b, k, fills))
            }
            other => other.clone(),
        }
    }
    let mut k = 0;
    go(sketch, &mut k, fills)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Lit {
    feature: usize,
    rel: Relation,
}

/// Single-literal quality measures used to pick the beam.
#[derive(Clone, Copy, Debug, Default)]
struct LitStats {
    accuracy: f64,
    /// Fraction of negatives rejected while accepting every positive.
    spec_at_full_recall: f64,
    /// Fraction of positives accepted while rejecting every negative.
    recall_at_full_precision: f64,
}

fn lit_stats(pos: &[f64], neg: &[f64], rel: Relation) -> LitStats {
    // Reduce `<` to `>` by negating; NaN never satisfies a literal.
    let f = |x: &f64| if rel == Relation::Gt { *x } else { -*x };
    let mut p: Vec<f64> = pos.iter().map(f).filter(|x| !x.is_nan()).collect();
    let mut n: Vec<f64> = neg.iter().map(f).filter(|x| !x.is_nan()).collect();
    p.sort_by(f64::total_cmp);
    n.sort_by(f64::total_cmp);
    let below = |v: &[f64], t: f64| v.partition_point(|x| *x < t);
    // θ just below `t` accepts exactly the values `>= t`.
    let correct = |t: f64| (p.len() - below(&p, t)) + (neg.len() - (n.len() - below(&n, t)));
    let best = p
        .iter()
        .chain(n.iter())
        .copied()
        .chain(std::iter::once(f64::INFINITY))
        .map(correct)
        .max()
        .unwrap_or(0);
    let spec = match p.first() {
        Some(&m) if p.len() == pos.len() && !neg.is_empty() => {
            (neg.len() - (n.len() - below(&n, m))) as f64 / neg.len() as f64
        }
        _ => 0.0,
    };
    let recall = match (n.last(), pos.len()) {
        (_, 0) => 0.0,
        (Some(&m), np) => (p.len() - p.partition_point(|x| *x <= m)) as f64 / np as f64,
        (None, np) => p.len() as f64 / np as f64,
    };
    LitStats {
        accuracy: best as f64 / (pos.len() + neg.len()).max(1) as f64,
        spec_at_full_recall: spec,
        recall_at_full_precision: recall,
    }
}

fn top_k(stats: &[(Lit, LitStats)], k: usize, key: impl Fn(&LitStats) -> f64) -> Vec<Lit> {
    let mut idx: Vec<usize> = (0..stats.len()).collect();
    idx.sort_by(|&a, &b| key(&stats[b].1).total_cmp(&key(&stats[a].1)).then(a.cmp(&b)));
    idx.into_iter().take(k).map(|i| stats[i].0).collect()
}

struct Problem<'a> {
    bank: &'a FeatureBank,
    /// Folded sketch, target and bank row per example.
    examples: Vec<(Skel, bool, usize)>,
    blanks: Vec<Param>,
    holes: usize,
    slot_names: Vec<String>,
    /// Every example is a constant or the bare single hole, with no blanks.
    single_hole: bool,
}

impl Problem<'_> {
    fn residual(&self, s: &Skel, row: usize, fills: &[(Shape, &[Lit])]) -> ResidualFormula {
        match s {
            Skel::Const(b) => ResidualFormula::Const(*b),
            Skel::Leaf(v, rel, k) => ResidualFormula::Leaf {
                observed: *v,
                rel: *rel,
                param: self.blanks[*k].name.clone(),
            },
            Skel::And(a, b) => ResidualFormula::and(
                self.residual(a, row, fills),
                self.residual(b, row, fills),
            ),
            Skel::Or(a, b) => {
                ResidualFormula::or(self.residual(a, row, fills), self.residual(b, row, fills))
            }
            Skel::Hole(h) => {
                let offset: usize = fills[..*h].iter().map(|f| f.0.literals()).sum();
                let (shape, lits) = fills[*h];
                let mut leaf = |i: usize| {
                    let l = lits[i];
                    ResidualFormula::Leaf {
                        observed: self.bank.scalar(l.feature).unwrap()[row],
                        rel: l.rel,
                        param: self.slot_names[offset + i].clone(),
                    }
                };
                shape.build(&mut leaf, ResidualFormula::and, ResidualFormula::or, ResidualFormula::Const)
            }
        }
    }

    /// Solves the thresholds of one structural candidate.
    fn solve(&self, fills: &[(Shape, &[Lit])], cfg: &SynthConfig) -> Option<(usize, Vec<f64>, Vec<f64>)> {
        if let [(Shape::Lit, [lit])] = fills {
            if self.single_hole {
                return Some(self.solve_one(*lit));
            }
        }
        self.solve_general(fills, cfg)
    }

    /// One threshold by a sorted sweep. Picks the same cell as `max_sat`:
    /// the first optimum among cells not dominated by a neighbour.
    fn solve_one(&self, lit: Lit) -> (usize, Vec<f64>, Vec<f64>) {
        let col = self.bank.scalar(lit.feature).unwrap();
        let mut fixed = 0;
        // (value, target) of the examples the literal decides.
        let mut obs: Vec<(f64, bool)> = Vec::new();
        for (s, target, row) in &self.examples {
            match s {
                Skel::Const(b) => fixed += usize::from(b == target),
                _ => {
                    let v = col[*row];
                    if v.is_finite() {
                        obs.push((v, *target));
                    } else {
                        // NaN never holds; an infinity holds for every finite θ or none.
                        let holds = !v.is_nan() && lit.rel.holds(v, 0.0);
                        fixed += usize::from(holds == *target);
                    }
                }
            }
        }
        obs.sort_by(|a, b| a.0.total_cmp(&b.0));
        // Per distinct value: how many want it above θ (literal true under
        // `>`) and how many want it below.
        let mut vals: Vec<(f64, usize, usize)> = Vec::new();
        for &(v, t) in &obs {
            let above = t == (lit.rel == Relation::Gt);
            match vals.last_mut() {
                Some(last) if last.0 == v => {
                    if above {
                        last.1 += 1
                    } else {
                        last.2 += 1
                    }
                }
                _ => vals.push((v, usize::from(above), usize::from(!above))),
            }
        }
        let n = vals.len();
        if n == 0 {
            // Only non-finite observations: the literal is false everywhere.
            return (fixed, vec![0.0], Vec::new());
        }
        // Cell j puts vals[..j] below θ. Start with everything above.
        let mut score: usize = vals.iter().map(|v| v.1).sum();
        let mut best: Option<(usize, usize)> = None;
        for j in 0..=n {
            if j > 0 {
                score = score - vals[j - 1].1 + vals[j - 1].2;
            }
            let dominated_down = j >= 1 && vals[j - 1].2 == 0;
            let dominated_up = j < n && vals[j].1 == 0;
            if dominated_down || dominated_up {
                continue;
            }
            if best.is_none_or(|(s, _)| score > s) {
                best = Some((score, j));
            }
        }
        let (score, j) = best.expect("some cell is undominated");
        let rep = if j == 0 {
            vals[0].0 - 1.0
        } else if j == n {
            vals[n - 1].0 + 1.0
        } else {
            0.5 * (vals[j - 1].0 + vals[j].0)
        };
        (fixed + score, vec![rep], Vec::new())
    }

    fn solve_general(&self, fills: &[(Shape, &[Lit])], cfg: &SynthConfig) -> Option<(usize, Vec<f64>, Vec<f64>)> {
        let n_lits: usize = fills.iter().map(|f| f.0.literals()).sum();
        let mut inst = SolveInstance::new();
        for (i, f) in fills.iter().flat_map(|f| f.1.iter()).enumerate() {
            let dim = self.bank.types[f.feature].dim().unwrap();
            inst = inst.param(&self.slot_names[i], dim, None);
        }
        for b in &self.blanks {
            inst = inst.param(&b.name, b.dim, None);
        }
        debug_assert_eq!(inst.params.len(), n_lits + self.blanks.len());
        for (s, target, row) in &self.examples {
            inst.push(
                ResidualConstraint {
                    formula: self.residual(s, *row, fills),
                    target: *target,
                },
                1.0,
            );
        }
        let r = max_sat(&inst, &cfg.solver()).ok()?;
        let lits = (0..n_lits).map(|i| r.assignment[&self.slot_names[i]]).collect();
        let blanks = self.blanks.iter().map(|b| r.assignment[&b.name]).collect();
        Some((r.satisfied_count, lits, blanks))
    }
}

/// Sketch parameters without a value become free parameters of the search.
fn blank_params(sketch: &Predicate) -> Vec<Param> {
    let mut out: Vec<Param> = Vec::new();
    sketch.visit_literals(&mut |_, _, p| {
        if p.is_blank() && !out.iter().any(|q| q.name == p.name) {
            out.push(p.clone());
        }
    });
    out
}

/// Shape assignments (one shape per hole) using exactly `n` literals.
fn shape_assignments(holes: usize, n: usize) -> Vec<Vec<Shape>> {
    fn go(h: usize, left: usize, cur: &mut Vec<Shape>, out: &mut Vec<Vec<Shape>>) {
        if h == 0 {
            if left == 0 {
                out.push(cur.clone());
            }
            return;
        }
        for k in 0..=left.min(3) {
            for s in Shape::with_literals(k) {
                cur.push(*s);
                go(h - 1, left - k, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(holes, n, &mut Vec::new(), &mut out);
    out
}

/// Literal tuples for a shape assignment: distinct pool entries, increasing
/// within each symmetric group.
fn literal_tuples(shapes: &[Shape], pool: &[Lit]) -> Vec<Vec<Lit>> {
    let mut groups: Vec<Option<usize>> = Vec::new();
    let mut group_id = 0;
    for s in shapes {
        let n = s.literals();
        let mut g = vec![None; n];
        for &(a, b) in s.symmetric() {
            for x in g.iter_mut().take(b).skip(a) {
                *x = Some(group_id);
            }
            group_id += 1;
        }
        groups.extend(g);
    }
    let slots = groups.len();
    let mut out = Vec::new();
    let mut cur: Vec<usize> = Vec::new();
    fn go(
        i: usize,
        slots: usize,
        groups: &[Option<usize>],
        pool: &[Lit],
        cur: &mut Vec<usize>,
        out: &mut Vec<Vec<Lit>>,
    ) {
        if i == slots {
            out.push(cur.iter().map(|&k| pool[k]).collect());
            return;
        }
        let start = match (i, groups[i]) {
            (0, _) | (_, None) => 0,
            (_, Some(g)) if groups[i - 1] == Some(g) => cur[i - 1] + 1,
            _ => 0,
        };
        for k in start..pool.len() {
            if cur.contains(&k) {
                continue;
            }
            cur.push(k);
            go(i + 1, slots, groups, pool, cur, out);
            cur.pop();
        }
    }
    go(0, slots, &groups, pool, &mut cur, &mut out);
    out
}

struct Scored {
    satisfied: usize,
    /// Literal count and expression depth of the fills only; the frozen part
    /// of the sketch is common to every candidate.
    complexity: (usize, usize),
    order: usize,
    predicate: Predicate,
}

fn better(a: &Scored, b: &Scored) -> bool {
    (std::cmp::Reverse(a.satisfied), a.complexity, a.order)
        < (std::cmp::Reverse(b.satisfied), b.complexity, b.order)
}

/// Completes the holes of `sketch` to best fit `pos` (must hold) and `neg`
/// (must not hold). New parameters are named by `fresh`.
pub(crate) fn complete(
    sketch: &Predicate,
    pos: &[Example],
    neg: &[Example],
    bank: &FeatureBank,
    cfg: &SynthConfig,
    fresh: &mut dyn FnMut() -> String,
) -> Result<Candidate, SynthError> {
    let blanks = blank_params(sketch);
    let blank_names: Vec<String> = blanks.iter().map(|b| b.name.clone()).collect();
    let mut examples = Vec::with_capacity(pos.len() + neg.len());
    for (ex, target) in pos.iter().map(|e| (e, true)).chain(neg.iter().map(|e| (e, false))) {
        let row = bank
            .row(&ex.world)
            .ok_or_else(|| SynthError::Config("example state missing from the feature bank".into()))?;
        let s = Skel::build(sketch, ex, &mut 0, &blank_names);
        examples.push((s, target, row));
    }
    let holes = sketch.blank_count();
    let total = examples.len();
    let slot_names: Vec<String> = (0..cfg.max_literals).map(|i| format!("__{i}")).collect();
    let single_hole = blanks.is_empty()
        && examples
            .iter()
            .all(|(s, _, _)| matches!(s, Skel::Const(_) | Skel::Hole(0)));
    let problem = Problem {
        bank,
        examples,
        blanks,
        holes,
        slot_names,
        single_hole,
    };

    // Features that vary on the examples where some hole matters, one per
    // observational class.
    let live: Vec<usize> = (0..total).filter(|&i| !problem.examples[i].0.is_const()).collect();
    let mut features = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for f in bank.scalar_features() {
        let col = bank.scalar(f).unwrap();
        let key: Vec<u64> = live.iter().map(|&i| col[problem.examples[i].2].to_bits()).collect();
        if key.windows(2).all(|w| w[0] == w[1]) {
            continue;
        }
        if seen.insert(key) {
            features.push(f);
        }
    }
    let pool: Vec<Lit> = features
        .iter()
        .flat_map(|&f| [Relation::Gt, Relation::Lt].map(|rel| Lit { feature: f, rel }))
        .collect();
    let stats: Vec<(Lit, LitStats)> = pool
        .par_iter()
        .map(|l| {
            let col = bank.scalar(l.feature).unwrap();
            let (mut p, mut n) = (Vec::new(), Vec::new());
            for &i in &live {
                let (_, t, r) = problem.examples[i];
                if t {
                    p.push(col[r]);
                } else {
                    n.push(col[r]);
                }
            }
            (*l, lit_stats(&p, &n, l.rel))
        })
        .collect();
    let beam = |k: usize| -> Vec<Lit> {
        let set: BTreeSet<Lit> = top_k(&stats, k, |s| s.accuracy)
            .into_iter()
            .chain(top_k(&stats, k, |s| s.spec_at_full_recall))
            .chain(top_k(&stats, k, |s| s.recall_at_full_precision))
            .collect();
        // Keep pool order for determinism.
        pool.iter().filter(|l| set.contains(l)).copied().collect()
    };

    // Second literals ranked on the examples an anchor leaves undecided: those
    // it accepts at full recall (for a conjunction) or rejects at full
    // precision (for a disjunction).
    let conditional = |k: usize| -> BTreeSet<Lit> {
        let signed = |l: &Lit, r: usize| {
            let v = bank.scalar(l.feature).unwrap()[r];
            if l.rel == Relation::Gt {
                v
            } else {
                -v
            }
        };
        let mut out = BTreeSet::new();
        let anchors = top_k(&stats, k, |s| s.spec_at_full_recall)
            .into_iter()
            .map(|a| (a, true))
            .chain(top_k(&stats, k, |s| s.recall_at_full_precision).into_iter().map(|a| (a, false)));
        for (a, conj) in anchors {
            let vals = |t: bool| -> Vec<f64> {
                live.iter()
                    .filter(|&&i| problem.examples[i].1 == t)
                    .map(|&i| signed(&a, problem.examples[i].2))
                    .collect()
            };
            let subset: Vec<usize> = if conj {
                let pos = vals(true);
                if pos.iter().any(|v| v.is_nan()) {
                    continue;
                }
                let lo = pos.iter().copied().fold(f64::INFINITY, f64::min);
                live.iter().copied().filter(|&i| signed(&a, problem.examples[i].2) >= lo).collect()
            } else {
                let hi = vals(false).into_iter().filter(|v| !v.is_nan()).fold(f64::NEG_INFINITY, f64::max);
                live.iter()
                    .copied()
                    .filter(|&i| !(signed(&a, problem.examples[i].2) > hi))
                    .collect()
            };
            let (np, nn) = subset.iter().fold((0, 0), |(p, n), &i| {
                if problem.examples[i].1 {
                    (p + 1, n)
                } else {
                    (p, n + 1)
                }
            });
            if np == 0 || nn == 0 {
                continue;
            }
            let sub: Vec<(Lit, LitStats)> = pool
                .par_iter()
                .filter(|l| **l != a)
                .map(|l| {
                    let col = bank.scalar(l.feature).unwrap();
                    let (mut p, mut n) = (Vec::new(), Vec::new());
                    for &i in &subset {
                        let (_, t, r) = problem.examples[i];
                        if t {
                            p.push(col[r]);
                        } else {
                            n.push(col[r]);
                        }
                    }
                    (*l, lit_stats(&p, &n, l.rel))
                })
                .collect();
            out.insert(a);
            let key = |s: &LitStats| if conj { s.spec_at_full_recall } else { s.recall_at_full_precision };
            out.extend(top_k(&sub, 2, key));
            out.extend(top_k(&sub, 1, |s| s.accuracy));
        }
        out
    };

    let mut best: Option<Scored> = None;
    let mut order = 0usize;
    let mut evaluated = 0usize;
    for n in 0..=cfg.max_literals {
        if n + problem.blanks.len() > cfg.max_params || (n > 0 && problem.holes == 0) {
            break;
        }
        let lit_pool = match n {
            0 => Vec::new(),
            1 => pool.clone(),
            2 => {
                let mut b = beam(cfg.beam_width);
                let extra = conditional(cfg.beam_width.div_ceil(3));
                b.retain(|l| !extra.contains(l));
                let b: BTreeSet<Lit> = b.into_iter().chain(extra).collect();
                pool.iter().filter(|l| b.contains(l)).copied().collect()
            }
            _ => beam(cfg.beam_width.div_ceil(2)),
        };
        let mut assignments = shape_assignments(problem.holes, n);
        if n == 0 {
            // Constant fills that keep more of the sketch come first, so the
            // untouched frozen part wins ties.
            assignments.sort_by_cached_key(|a| {
                let kept = instantiate(sketch, &mut |h| match a[h] {
                    Shape::True => Predicate::True,
                    _ => Predicate::False,
                });
                std::cmp::Reverse(kept.literal_count())
            });
        }
        let mut keys = BTreeSet::new();
        for shapes in assignments {
            // Structures that fold to the same predicate are tried once.
            let mut slot = 0usize;
            let key = print_predicate(&instantiate(sketch, &mut |h| {
                let mut lit = |_: usize| {
                    slot += 1;
                    Predicate::Cmp {
                        rel: Relation::Gt,
                        expr: crate::lang::Expr::input(&format!("__s{slot}"), crate::lang::AspType::Bool),
                        param: Param::blank("__", crate::dim::Dimension::DIMENSIONLESS),
                    }
                };
                shapes[h].build(&mut lit, pred_and, pred_or, |b| if b { Predicate::True } else { Predicate::False })
            }));
            if !keys.insert(key) {
                continue;
            }
            let tuples = if n == 0 { vec![Vec::new()] } else { literal_tuples(&shapes, &lit_pool) };
            if evaluated + tuples.len() > cfg.max_candidates {
                break;
            }
            evaluated += tuples.len();
            let base = order;
            order += tuples.len();
            let results: Vec<Option<Scored>> = tuples
                .par_iter()
                .enumerate()
                .map(|(i, lits)| {
                    let mut fills = Vec::with_capacity(shapes.len());
                    let mut off = 0;
                    for s in &shapes {
                        fills.push((*s, &lits[off..off + s.literals()]));
                        off += s.literals();
                    }
                    let (satisfied, lit_vals, blank_vals) = problem.solve(&fills, cfg)?;
                    let predicate = realize(sketch, &fills, bank, &lit_vals, &problem.blanks, &blank_vals, &problem.slot_names);
                    Some(Scored {
                        satisfied,
                        complexity: (lits.len(), lits.iter().map(|l| bank.depths[l.feature]).sum()),
                        order: base + i,
                        predicate,
                    })
                })
                .collect();
            for r in results.into_iter().flatten() {
                if best.as_ref().is_none_or(|b| better(&r, b)) {
                    best = Some(r);
                }
            }
        }
        if best.as_ref().is_some_and(|b| b.satisfied == total) {
            break;
        }
    }
    let best = best.ok_or(SynthError::BudgetExceeded(cfg.max_candidates))?;
    let mut predicate = best.predicate;
    for p in predicate.params_mut() {
        if p.name.starts_with("__") {
            p.name = fresh();
        }
    }
    let s = score(&predicate, pos, neg);
    Ok(Candidate {
        complexity: (predicate.literal_count(), predicate.expr_depth()),
        predicate,
        score: s,
    })
}

fn realize(
    sketch: &Predicate,
    fills: &[(Shape, &[Lit])],
    bank: &FeatureBank,
    lit_vals: &[f64],
    blanks: &[Param],
    blank_vals: &[f64],
    slot_names: &[String],
) -> Predicate {
    let mut slot = 0usize;
    let mut p = instantiate(sketch, &mut |h| {
        let (shape, lits) = fills[h];
        let mut lit = |i: usize| {
            let l = lits[i];
            let k = slot;
            slot += 1;
            Predicate::Cmp {
                rel: l.rel,
                expr: bank.exprs[l.feature].clone(),
                param: Param::new(slot_names[k].clone(), bank.types[l.feature].dim().unwrap(), lit_vals[k]),
            }
        };
        shape.build(&mut lit, pred_and, pred_or, |b| if b { Predicate::True } else { Predicate::False })
    });
    for q in p.params_mut() {
        if let Some(i) = blanks.iter().position(|b| b.name == q.name && q.value.is_none()) {
            q.value = Some(blank_vals[i]);
        }
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn value() -> impl Strategy<Value = f64> {
        prop_oneof![
            8 => (-6i32..6).prop_map(|x| x as f64 * 0.5),
            1 => Just(f64::NAN),
            1 => Just(f64::INFINITY),
        ]
    }

    proptest! {
        #[test]
        fn single_literal_sweep_matches_solver(
            rows in prop::collection::vec((value(), any::<bool>(), 0u8..5), 1..40),
            gt in any::<bool>(),
        ) {
            let col: Vec<f64> = rows.iter().map(|r| r.0).collect();
            let bank = FeatureBank::from_columns(vec![col]);
            let examples = rows
                .iter()
                .enumerate()
                .map(|(i, &(_, t, k))| {
                    let s = match k {
                        0 => Skel::Const(true),
                        1 => Skel::Const(false),
                        _ => Skel::Hole(0),
                    };
                    (s, t, i)
                })
                .collect();
            let problem = Problem {
                bank: &bank,
                examples,
                blanks: Vec::new(),
                holes: 1,
                slot_names: vec!["__0".into()],
                single_hole: true,
            };
            let lit = Lit { feature: 0, rel: if gt { Relation::Gt } else { Relation::Lt } };
            let lits = [lit];
            let fills = [(Shape::Lit, &lits[..])];
            let fast = problem.solve_one(lit);
            let general = problem.solve_general(&fills, &SynthConfig::default()).unwrap();
            prop_assert_eq!(fast, general);
        }
    }

    #[test]
    fn shape_assignments_count_literals() {
        assert_eq!(shape_assignments(1, 0).len(), 2);
        assert_eq!(shape_assignments(1, 2), vec![vec![Shape::And2], vec![Shape::Or2]]);
        // Three holes, one literal: position times constant pairs.
        assert_eq!(shape_assignments(3, 1).len(), 3 * 4);
    }

    #[test]
    fn symmetric_slots_are_ordered() {
        let pool: Vec<Lit> = (0..4)
            .map(|f| Lit {
                feature: f,
                rel: Relation::Gt,
            })
            .collect();
        assert_eq!(literal_tuples(&[Shape::And2], &pool).len(), 6);
        assert_eq!(literal_tuples(&[Shape::Lit, Shape::Lit], &pool).len(), 12);
        assert_eq!(literal_tuples(&[Shape::OrAnd], &pool).len(), 6 * 2);
    }

    #[test]
    fn stats_of_a_separating_literal() {
        let s = lit_stats(&[3.0, 4.0], &[1.0, 2.0], Relation::Gt);
        assert_eq!(s.accuracy, 1.0);
        assert_eq!(s.spec_at_full_recall, 1.0);
        assert_eq!(s.recall_at_full_precision, 1.0);
        let s = lit_stats(&[3.0, 4.0], &[1.0, 2.0], Relation::Lt);
        assert_eq!(s.accuracy, 0.5);
    }
}
