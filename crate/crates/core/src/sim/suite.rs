//! Cross-product trial runs and their aggregates.

use rayon::prelude::*;
use serde::Serialize;

use super::{run_trial, Scenario, TrialMetrics};
use crate::lang::Policy;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteRow {
    pub policy: String,
    pub scenario: String,
    pub seed: u64,
    pub metrics: TrialMetrics,
}

/// Runs every policy on every scenario under every seed. Trials run in
/// parallel; rows come back in (policy, scenario, seed) order.
pub fn run_suite(scenarios: &[Scenario], policies: &[(String, Policy)], seeds: &[u64]) -> Vec<SuiteRow> {
    let jobs: Vec<(usize, usize, u64)> = (0..policies.len())
        .flat_map(|p| (0..scenarios.len()).flat_map(move |s| seeds.iter().map(move |&k| (p, s, k))))
        .collect();
    jobs.par_iter()
        .map(|&(p, s, seed)| {
            let sc = scenarios[s].with_seed(seed);
            SuiteRow {
                policy: policies[p].0.clone(),
                scenario: sc.name.clone(),
                seed,
                metrics: run_trial(&sc, &policies[p].1, false).metrics,
            }
        })
        .collect()
}

/// `policy,scenario,seed,success,time_s,force,blame`; unfinished trials have
/// time `DNF`.
pub fn metrics_csv(rows: &[SuiteRow]) -> String {
    let mut out = String::from("policy,scenario,seed,success,time_s,force,blame\n");
    for r in rows {
        let m = &r.metrics;
        let time = m.time_to_goal.map_or("DNF".to_string(), |t| format!("{t}"));
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.policy, r.scenario, r.seed, m.success, time, m.force, m.blame
        ));
    }
    out
}

/// Mean and half-width of the 90% normal-approximation interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub ci90: f64,
}

impl Estimate {
    fn of(xs: &[f64]) -> Estimate {
        let n = xs.len() as f64;
        if xs.is_empty() {
            return Estimate {
                mean: f64::NAN,
                ci90: f64::NAN,
            };
        }
        let mean = xs.iter().sum::<f64>() / n;
        let var = if xs.len() > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Estimate {
            mean,
            ci90: 1.6448536269514722 * (var / n).sqrt(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub policy: String,
    pub scenario: String,
    pub trials: usize,
    pub success_rate: f64,
    /// Over successful trials only.
    pub time: Estimate,
    pub force: Estimate,
    pub blame: Estimate,
}

/// One summary per (policy, scenario), in first-appearance order.
pub fn summarize(rows: &[SuiteRow]) -> Vec<Summary> {
    let mut keys: Vec<(&str, &str)> = Vec::new();
    for r in rows {
        let k = (r.policy.as_str(), r.scenario.as_str());
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(p, s)| {
            let group: Vec<&TrialMetrics> = rows
                .iter()
                .filter(|r| r.policy == p && r.scenario == s)
                .map(|r| &r.metrics)
                .collect();
            let times: Vec<f64> = group.iter().filter_map(|m| m.time_to_goal).collect();
            Summary {
                policy: p.to_string(),
                scenario: s.to_string(),
                trials: group.len(),
                success_rate: group.iter().filter(|m| m.success).count() as f64 / group.len() as f64,
                time: Estimate::of(&times),
                force: Estimate::of(&group.iter().map(|m| m.force).collect::<Vec<_>>()),
                blame: Estimate::of(&group.iter().map(|m| m.blame).collect::<Vec<_>>()),
            }
        })
        .collect()
}

pub fn summary_csv(rows: &[Summary]) -> String {
    let mut out = String::from(
        "policy,scenario,trials,success_rate,time_mean,time_ci90,force_mean,force_ci90,blame_mean,blame_ci90\n",
    );
    for s in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            s.policy,
            s.scenario,
            s.trials,
            s.success_rate,
            s.time.mean,
            s.time.ci90,
            s.force.mean,
            s.force.ci90,
            s.blame.mean,
            s.blame.ci90
        ));
    }
    out
}
