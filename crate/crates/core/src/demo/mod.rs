//! Demonstrations and fault localization.

mod io;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::DemoError;
use crate::eval::{score, Example, WorldState};
use crate::lang::{join_action_guard, Action, DomainDefinition, Policy, Predicate};

pub use io::{demo_to_json, demos_from_json, demos_to_json, load_demos, save_demos};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DemoSource {
    #[serde(rename = "simulated")]
    Simulated,
    #[serde(rename = "joystick")]
    Joystick,
    #[serde(rename = "ui-label")]
    UiLabel,
}

impl DemoSource {
    pub fn name(self) -> &'static str {
        match self {
            DemoSource::Simulated => "simulated",
            DemoSource::Joystick => "joystick",
            DemoSource::UiLabel => "ui-label",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "simulated" => Some(DemoSource::Simulated),
            "joystick" => Some(DemoSource::Joystick),
            "ui-label" => Some(DemoSource::UiLabel),
            _ => None,
        }
    }
}

/// One labelled transition `⟨prev, state, next⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct Demonstration {
    pub prev: Action,
    pub state: Arc<WorldState>,
    pub next: Action,
    pub tick: u64,
    pub source: DemoSource,
}

impl Demonstration {
    pub fn new(prev: Action, state: Arc<WorldState>, next: Action) -> Self {
        Demonstration {
            prev,
            state,
            next,
            tick: 0,
            source: DemoSource::Simulated,
        }
    }

    pub fn example(&self) -> Example {
        Example::new(self.prev.clone(), self.state.clone())
    }
}

/// Checks that every action of the demonstrations belongs to the domain.
/// Fraction of demonstrations whose next action the policy reproduces.
pub fn agreement(p: &Policy, demos: &[Demonstration]) -> f64 {
    if demos.is_empty() {
        return 1.0;
    }
    let hits = demos
        .iter()
        .filter(|d| crate::eval::eval_policy(p, &d.prev, &d.state) == d.next)
        .count();
    hits as f64 / demos.len() as f64
}

pub fn check_actions(demos: &[Demonstration], dom: &DomainDefinition) -> Result<(), DemoError> {
    for d in demos {
        for a in [&d.prev, &d.next] {
            if !dom.has_action(a) {
                return Err(DemoError::UnknownAction(a.to_string()));
            }
        }
    }
    Ok(())
}

/// A predicate of the policy (or a scaffold for a missing branch) together
/// with the examples it must accept and reject.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalizedFault {
    pub from: Action,
    pub to: Action,
    /// The full branch guard, or `start == from && ?pred` for a scaffold.
    pub predicate: Predicate,
    /// Index of the branch in the policy; `None` for scaffolds.
    pub branch: Option<usize>,
    /// False for guards that do not start with `start == a`; their examples
    /// are drawn from every previous action.
    pub canonical: bool,
    pub pos: Vec<Example>,
    pub neg: Vec<Example>,
}

impl LocalizedFault {
    pub fn is_scaffold(&self) -> bool {
        self.branch.is_none()
    }

    pub fn score(&self) -> f64 {
        score(&self.predicate, &self.pos, &self.neg)
    }
}

fn split(demos: &[Demonstration], keep: impl Fn(&Demonstration) -> bool, to: &Action) -> (Vec<Example>, Vec<Example>) {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for d in demos.iter().filter(|d| keep(d)) {
        if &d.next == to {
            pos.push(d.example());
        } else {
            neg.push(d.example());
        }
    }
    (pos, neg)
}

/// Maps the demonstrations onto the predicates of `p`.
///
/// For a branch `start == a1 && b : return a2`, the positives are the demos
/// with `prev = a1, next = a2` and the negatives the other demos with
/// `prev = a1`. A guard without a leading `start == a` is judged on every
/// demo whose previous action differs from its result, plus the demos that
/// should have left that action. Every transition `a1 → a2` (`a1 ≠ a2`) seen in
/// the demos without a branch of its own gets a scaffold. Branches come first
/// in policy order, then scaffolds ordered by `(from, to)`.
pub fn find_predicates(demos: &[Demonstration], p: &Policy) -> Vec<LocalizedFault> {
    let mut faults = Vec::new();
    let mut covered = BTreeSet::new();
    let sources: BTreeSet<&Action> = demos.iter().map(|d| &d.prev).collect();
    for (i, b) in p.branches.iter().enumerate() {
        match b.source_action().filter(|_| b.split_guard().is_some()) {
            Some(a1) => {
                covered.insert((a1.clone(), b.action.clone()));
                if !sources.contains(a1) {
                    continue;
                }
                let (pos, neg) = split(demos, |d| &d.prev == a1, &b.action);
                faults.push(LocalizedFault {
                    from: a1.clone(),
                    to: b.action.clone(),
                    predicate: b.guard.clone(),
                    branch: Some(i),
                    canonical: true,
                    pos,
                    neg,
                });
            }
            None => {
                let to = &b.action;
                // Self-transitions into `to` are consistent either way.
                let (pos, neg) = split(demos, |d| !(d.prev == *to && d.next == *to), to);
                if pos.is_empty() && neg.is_empty() {
                    continue;
                }
                faults.push(LocalizedFault {
                    from: Action::new("*"),
                    to: to.clone(),
                    predicate: b.guard.clone(),
                    branch: Some(i),
                    canonical: false,
                    pos,
                    neg,
                });
            }
        }
    }
    let mut seen: BTreeMap<(Action, Action), ()> = BTreeMap::new();
    for d in demos {
        if d.prev != d.next && !covered.contains(&(d.prev.clone(), d.next.clone())) {
            seen.insert((d.prev.clone(), d.next.clone()), ());
        }
    }
    for (a1, a2) in seen.into_keys() {
        let (pos, neg) = split(demos, |d| d.prev == a1, &a2);
        faults.push(LocalizedFault {
            predicate: join_action_guard(a1.clone(), Predicate::Blank),
            from: a1,
            to: a2,
            branch: None,
            canonical: true,
            pos,
            neg,
        });
    }
    faults
}
