//! Policy synthesis, parameter optimization, predicate repair, and the
//! interactive repair loop that ties them together.

mod bank;
mod search;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::demo::{find_predicates, Demonstration, LocalizedFault};
use crate::error::SynthError;
use crate::eval::{partial_eval, score, Example, ResidualConstraint, WorldState};
use crate::lang::{
    join_action_guard, print_predicate, typecheck_policy, Action, Branch, DomainDefinition,
    Policy, Predicate,
};
use crate::solver::{srtr_optimize, SolveInstance, SolverConfig};

pub use bank::{enum_exprs, FeatureBank, LastLevel};

#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    /// λ: a predicate scoring below this is optimized, then repaired.
    pub min_score: f64,
    pub max_expr_depth: usize,
    pub max_literals: usize,
    pub max_params: usize,
    /// Cap on enumerated expressions.
    pub max_features: usize,
    /// Cap on structural candidates per completion.
    pub max_candidates: usize,
    /// Literals kept per ranking for layers beyond the first.
    pub beam_width: usize,
    pub srtr_sweep_budget: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            min_score: 0.95,
            max_expr_depth: 2,
            max_literals: 3,
            max_params: 4,
            max_features: 50_000,
            max_candidates: 200_000,
            beam_width: 8,
            srtr_sweep_budget: SolverConfig::default().srtr_sweep_budget,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        if !(self.min_score > 0.0 && self.min_score <= 1.0) {
            return Err(SynthError::Config(format!(
                "min score must lie in (0, 1], got {}",
                self.min_score
            )));
        }
        if self.max_expr_depth < 1 {
            return Err(SynthError::Config("expression depth must be at least 1".into()));
        }
        Ok(())
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig {
            max_params: self.max_params,
            srtr_sweep_budget: self.srtr_sweep_budget,
        }
    }
}

/// A completed predicate and how well it fits its examples.
#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub predicate: Predicate,
    pub score: f64,
    /// Literal count and summed expression depth.
    pub complexity: (usize, usize),
}

fn unique_states<'a>(examples: impl Iterator<Item = &'a Arc<WorldState>>) -> Vec<Arc<WorldState>> {
    let mut seen = BTreeSet::new();
    examples
        .filter(|w| seen.insert(Arc::as_ptr(w) as usize))
        .cloned()
        .collect()
}

/// Shared state of one synthesis or repair run: the feature bank over all
/// demonstration states and the parameter names already in use.
pub struct Synthesizer<'a> {
    pub dom: &'a DomainDefinition,
    pub cfg: &'a SynthConfig,
    pub bank: FeatureBank,
    taken: BTreeSet<String>,
}

impl<'a> Synthesizer<'a> {
    pub fn new(
        dom: &'a DomainDefinition,
        cfg: &'a SynthConfig,
        states: &[Arc<WorldState>],
    ) -> Result<Self, SynthError> {
        cfg.validate()?;
        let bank = FeatureBank::build(
            dom,
            &unique_states(states.iter()),
            cfg.max_expr_depth,
            LastLevel::Scalars,
            cfg.max_features,
        )?;
        Ok(Synthesizer {
            dom,
            cfg,
            bank,
            taken: BTreeSet::new(),
        })
    }

    pub fn for_demos(
        dom: &'a DomainDefinition,
        cfg: &'a SynthConfig,
        demos: &[Demonstration],
    ) -> Result<Self, SynthError> {
        let states: Vec<_> = demos.iter().map(|d| d.state.clone()).collect();
        Self::new(dom, cfg, &states)
    }

    /// Reserves every parameter name of `p`.
    pub fn reserve(&mut self, p: &Policy) {
        self.taken
            .extend(p.params().into_iter().map(|q| q.name.clone()));
    }

    /// Best completion of `sketch` on the examples.
    pub fn complete(
        &mut self,
        sketch: &Predicate,
        pos: &[Example],
        neg: &[Example],
    ) -> Result<Candidate, SynthError> {
        self.taken
            .extend(sketch.params().into_iter().map(|q| q.name.clone()));
        let mut names = Vec::new();
        let cand = {
            let taken = &self.taken;
            let mut fresh = || {
                let name = (0..)
                    .map(|k| format!("th{k}"))
                    .find(|n| !taken.contains(n) && !names.contains(n))
                    .expect("unbounded");
                names.push(name.clone());
                name
            };
            search::complete(sketch, pos, neg, &self.bank, self.cfg, &mut fresh)?
        };
        self.taken.extend(names);
        Ok(cand)
    }

    /// Fills the scaffold of a transition without a branch.
    pub fn synth_branch(&mut self, fault: &LocalizedFault) -> Result<Candidate, SynthError> {
        let mut c = self.complete(&fault.predicate, &fault.pos, &fault.neg)?;
        if let Some((a, body)) = crate::lang::split_action_guard(&c.predicate) {
            c.predicate = join_action_guard(a, body);
        }
        Ok(c)
    }

    /// Extends a faulty predicate with the smallest template that can fix it
    /// and completes the template. The original predicate is kept verbatim.
    pub fn repair(&mut self, fault: &LocalizedFault) -> Result<Repair, SynthError> {
        let before = fault.score();
        let (source, b) = match (fault.canonical, crate::lang::split_action_guard(&fault.predicate)) {
            (true, Some((a, body))) => (Some(a), body),
            _ => (None, fault.predicate.clone()),
        };
        let false_neg = score(&fault.predicate, &fault.pos, &[]) < 1.0;
        let false_pos = score(&fault.predicate, &[], &fault.neg) < 1.0;
        let (kind, sketch) = match (false_neg, false_pos) {
            (true, true) => (
                RepairKind::Both,
                Predicate::or(
                    Predicate::and(b.clone(), Predicate::Blank),
                    Predicate::and(Predicate::Blank, Predicate::Blank),
                ),
            ),
            (true, false) => (RepairKind::Weaken, Predicate::or(b.clone(), Predicate::Blank)),
            (false, true) => (RepairKind::Strengthen, Predicate::and(b.clone(), Predicate::Blank)),
            (false, false) => {
                return Ok(Repair {
                    kind: RepairKind::None,
                    predicate: fault.predicate.clone(),
                    before,
                    after: before,
                })
            }
        };
        let c = self.complete(&sketch, &fault.pos, &fault.neg)?;
        let predicate = match source {
            Some(a) => join_action_guard(a, c.predicate),
            None => c.predicate,
        };
        let after = score(&predicate, &fault.pos, &fault.neg);
        Ok(Repair {
            kind,
            predicate,
            before,
            after,
        })
    }
}

/// Which template a repair used.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepairKind {
    None,
    /// `b || ?`
    Weaken,
    /// `b && ?`
    Strengthen,
    /// `(b && ?) || (? && ?)`
    Both,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Repair {
    pub kind: RepairKind,
    pub predicate: Predicate,
    pub before: f64,
    pub after: f64,
}

/// Completes `sketch` on the fault's examples with a feature bank built from
/// those examples alone.
pub fn synth_predicate(
    dom: &DomainDefinition,
    fault: &LocalizedFault,
    cfg: &SynthConfig,
    sketch: &Predicate,
) -> Result<Candidate, SynthError> {
    let states: Vec<_> = fault
        .pos
        .iter()
        .chain(&fault.neg)
        .map(|e| e.world.clone())
        .collect();
    let mut s = Synthesizer::new(dom, cfg, &states)?;
    s.complete(sketch, &fault.pos, &fault.neg)
}

/// Repairs one fault (see [`Synthesizer::repair`]).
pub fn repair(
    dom: &DomainDefinition,
    fault: &LocalizedFault,
    cfg: &SynthConfig,
) -> Result<Repair, SynthError> {
    let states: Vec<_> = fault
        .pos
        .iter()
        .chain(&fault.neg)
        .map(|e| e.world.clone())
        .collect();
    let mut s = Synthesizer::new(dom, cfg, &states)?;
    s.taken.extend(fault.predicate.params().into_iter().map(|q| q.name.clone()));
    s.repair(fault)
}

/// Inserts new branches: after the last branch with the same source action,
/// or at the end for a new source action. `new` must already be ordered.
fn insert_branches(p: &mut Policy, new: Vec<(Action, Branch)>) {
    for (a1, b) in new {
        let at = p
            .branches
            .iter()
            .rposition(|x| x.source_action() == Some(&a1))
            .map(|i| i + 1)
            .unwrap_or(p.branches.len());
        p.branches.insert(at, b);
    }
}

/// Builds branches for every transition seen in the demos that `p` has no
/// branch for. Returns the synthesized transitions with their scores.
fn synthesize_missing(
    s: &mut Synthesizer,
    demos: &[Demonstration],
    p: &mut Policy,
) -> Result<Vec<(LocalizedFault, Candidate)>, SynthError> {
    s.reserve(p);
    let scaffolds: Vec<LocalizedFault> = find_predicates(demos, p)
        .into_iter()
        .filter(LocalizedFault::is_scaffold)
        .collect();
    let mut done = Vec::new();
    for f in scaffolds {
        let c = s.synth_branch(&f)?;
        done.push((f, c));
    }
    // Within a source action: more supporting demos first, then action name.
    done.sort_by(|(fa, _), (fb, _)| {
        fa.from
            .cmp(&fb.from)
            .then(fb.pos.len().cmp(&fa.pos.len()))
            .then(fa.to.cmp(&fb.to))
    });
    let branches = done
        .iter()
        .filter(|(_, c)| c.predicate != Predicate::False)
        .map(|(f, c)| {
            (
                f.from.clone(),
                Branch {
                    guard: c.predicate.clone(),
                    action: f.to.clone(),
                },
            )
        })
        .collect();
    insert_branches(p, branches);
    Ok(done)
}

/// Synthesizes a branch for every demonstrated transition `a1 → a2`
/// (`a1 ≠ a2`) that `p0` lacks.
pub fn synthesize(
    demos: &[Demonstration],
    p0: Option<&Policy>,
    dom: &DomainDefinition,
    cfg: &SynthConfig,
) -> Result<Policy, SynthError> {
    if demos.is_empty() {
        return Err(SynthError::NoDemos);
    }
    let mut s = Synthesizer::for_demos(dom, cfg, demos)?;
    let mut p = p0.cloned().unwrap_or_default();
    synthesize_missing(&mut s, demos, &mut p)?;
    typecheck_policy(&p, dom)?;
    Ok(p)
}

/// Minimal-change threshold update for one guard. `None` when the guard
/// has no parameters or too many.
pub fn optimize_predicate(
    guard: &Predicate,
    pos: &[Example],
    neg: &[Example],
    cfg: &SolverConfig,
) -> Option<Predicate> {
    let params = guard.params();
    if params.is_empty() {
        return None;
    }
    let mut inst = SolveInstance::new();
    for q in &params {
        inst = inst.param(&q.name, q.dim, q.value);
    }
    for (ex, target) in pos.iter().map(|e| (e, true)).chain(neg.iter().map(|e| (e, false))) {
        // A guard that cannot be evaluated on an example cannot satisfy it.
        let formula = partial_eval(guard, &ex.prev, &ex.world)
            .unwrap_or(crate::eval::ResidualFormula::Const(!target));
        inst.push(ResidualConstraint { formula, target }, 1.0);
    }
    let r = srtr_optimize(&inst, cfg).ok()?;
    let mut out = guard.clone();
    for q in out.params_mut() {
        q.value = Some(r.assignment[&q.name]);
    }
    Some(out)
}

/// Updates the thresholds of every branch to fit `demos` with minimal
/// change, leaving the structure alone.
pub fn optimize(demos: &[Demonstration], p: &Policy, cfg: &SynthConfig) -> Policy {
    let mut out = p.clone();
    for f in find_predicates(demos, p) {
        let Some(i) = f.branch else { continue };
        if let Some(g) = optimize_predicate(&f.predicate, &f.pos, &f.neg, &cfg.solver()) {
            if score(&g, &f.pos, &f.neg) >= f.score() {
                out.branches[i].guard = g;
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    None,
    Synthesized,
    Optimized,
    Repaired,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub transition: String,
    pub branch: Option<usize>,
    pub stage: Stage,
    pub before_score: f64,
    pub after_score: f64,
    pub before: String,
    pub after: String,
    pub diff: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepairReport {
    pub v: u32,
    pub summary: String,
    pub entries: Vec<ReportEntry>,
}

impl RepairReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

fn threshold_diff(a: &Predicate, b: &Predicate) -> String {
    let changes: Vec<String> = a
        .params()
        .iter()
        .zip(b.params())
        .filter(|(x, y)| x.value != y.value)
        .map(|(x, y)| {
            format!(
                "{}: {} -> {}",
                x.name,
                x.value.map_or("?".into(), |v| format!("{v:?}")),
                y.value.map_or("?".into(), |v| format!("{v:?}"))
            )
        })
        .collect();
    if changes.is_empty() {
        "unchanged".into()
    } else {
        changes.join(", ")
    }
}

/// The repair loop: synthesize branches for unseen transitions, then for
/// each predicate scoring below λ first re-fit its thresholds and, if that is
/// not enough, extend it. Returns the updated policy and a per-transition
/// report.
pub fn idips(
    demos: &[Demonstration],
    p0: Option<&Policy>,
    dom: &DomainDefinition,
    cfg: &SynthConfig,
) -> Result<(Policy, RepairReport), SynthError> {
    cfg.validate()?;
    let mut p = p0.cloned().unwrap_or_default();
    let mut entries = Vec::new();
    if demos.is_empty() {
        return Ok((
            p,
            RepairReport {
                v: 1,
                summary: "no faults".into(),
                entries,
            },
        ));
    }
    let mut s = Synthesizer::for_demos(dom, cfg, demos)?;
    let synthesized: BTreeMap<(Action, Action), f64> = synthesize_missing(&mut s, demos, &mut p)?
        .into_iter()
        .map(|(f, c)| ((f.from, f.to), c.score))
        .collect();
    for f in find_predicates(demos, &p) {
        let Some(i) = f.branch else { continue };
        let transition = format!("{}->{}", f.from, f.to);
        let before_text = print_predicate(&f.predicate);
        if let Some(sc) = synthesized.get(&(f.from.clone(), f.to.clone())) {
            if f.canonical && p.branches[i].guard == f.predicate && *sc == f.score() {
                entries.push(ReportEntry {
                    transition,
                    branch: Some(i),
                    stage: Stage::Synthesized,
                    before_score: 0.0,
                    after_score: f.score(),
                    before: String::new(),
                    after: before_text,
                    diff: "new branch".into(),
                });
                continue;
            }
        }
        let before = f.score();
        let mut current = f.predicate.clone();
        let mut after = before;
        let mut stage = Stage::None;
        let mut diff = "unchanged".to_string();
        if before < cfg.min_score {
            if let Some(g) = optimize_predicate(&current, &f.pos, &f.neg, &cfg.solver()) {
                let sc = score(&g, &f.pos, &f.neg);
                if sc > after {
                    diff = threshold_diff(&current, &g);
                    current = g;
                    after = sc;
                    stage = Stage::Optimized;
                }
            }
        }
        if after < cfg.min_score {
            let fault = LocalizedFault {
                predicate: current.clone(),
                ..f.clone()
            };
            let r = s.repair(&fault)?;
            if r.after > after {
                diff = match r.kind {
                    RepairKind::Weaken => "extended with a disjunction",
                    RepairKind::Strengthen => "extended with a conjunction",
                    RepairKind::Both => "extended with a conjunction and a disjunction",
                    RepairKind::None => "unchanged",
                }
                .into();
                current = r.predicate;
                after = r.after;
                stage = Stage::Repaired;
            }
        }
        p.branches[i].guard = current.clone();
        entries.push(ReportEntry {
            transition,
            branch: Some(i),
            stage,
            before_score: before,
            after_score: after,
            before: before_text,
            after: print_predicate(&current),
            diff,
        });
    }
    typecheck_policy(&p, dom)?;
    let changed = entries.iter().filter(|e| e.stage != Stage::None).count();
    let summary = if changed == 0 {
        "no faults".to_string()
    } else {
        format!("{changed} of {} predicates changed", entries.len())
    };
    Ok((
        p,
        RepairReport {
            v: 1,
            summary,
            entries,
        },
    ))
}
