//! Stock scenarios, scripted demonstrators, and random ground-truth
//! policies for generating demonstrations.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{run_trial, Door, Map, RobotTask, Scenario, SimParams, SpawnGroup};
use crate::demo::Demonstration;
use crate::eval::eval_predicate;
use crate::lang::{parse, DomainDefinition, Policy};

fn walls() -> Vec<[f64; 4]> {
    vec![[-2.0, -1.8, 26.0, -1.8], [-2.0, 1.8, 26.0, 1.8]]
}

fn base(name: &str) -> Scenario {
    Scenario {
        v: 1,
        name: name.into(),
        seed: 0,
        dt: 0.05,
        max_ticks: 1200,
        map: Map {
            walls: walls(),
            door: None,
        },
        robot: RobotTask {
            start: [0.0, 0.0],
            heading: None,
            goal: [22.0, 0.0],
            waypoints: vec![],
        },
        humans: vec![],
        spawn: vec![],
        params: SimParams::default(),
    }
}

/// A 3.6 m wide corridor with nobody in it.
pub fn empty_corridor() -> Scenario {
    base("empty")
}

/// The corridor with up to three humans walking each way.
pub fn hallway() -> Scenario {
    Scenario {
        spawn: vec![
            SpawnGroup {
                count: [0, 3],
                x: [3.0, 18.0],
                y: [-1.2, 1.2],
                speed: [0.4, 0.8],
                goal_x: 32.0,
            },
            SpawnGroup {
                count: [0, 3],
                x: [6.0, 22.0],
                y: [-1.2, 1.2],
                speed: [0.7, 1.2],
                goal_x: -8.0,
            },
        ],
        ..base("hallway")
    }
}

/// The corridor closed by a door halfway along. Humans on the near side
/// walk toward the robot and away from the door; those beyond it walk away.
pub fn door_hallway() -> Scenario {
    Scenario {
        map: Map {
            walls: walls(),
            door: Some(Door {
                segment: [12.0, -1.8, 12.0, 1.8],
                open: false,
                open_delay_s: 5.0,
                trigger_radius: 1.5,
            }),
        },
        spawn: vec![
            SpawnGroup {
                count: [0, 2],
                x: [4.0, 9.0],
                y: [-1.2, 1.2],
                speed: [0.7, 1.2],
                goal_x: -8.0,
            },
            SpawnGroup {
                count: [0, 2],
                x: [13.0, 20.0],
                y: [-1.2, 1.2],
                speed: [0.5, 1.0],
                goal_x: 32.0,
            },
        ],
        ..base("door")
    }
}

/// Waits behind people walking its way and sidesteps oncoming ones early.
pub const NICE_DEMONSTRATOR: &str = "\
if start == GoAlone && norm(p_h) < t0 [1,0,0] = 2.2 && v_h.x > t1 [1,-1,0] = -0.2: return Halt
elif start == GoAlone && norm(p_h) < t2 [1,0,0] = 3.0 && v_h.x < t3 [1,-1,0] = -0.2: return Pass
elif start == Halt && norm(p_h) > t4 [1,0,0] = 3.0: return GoAlone
elif start == Pass && norm(p_h) > t5 [1,0,0] = 3.5: return GoAlone
";

/// Overtakes whenever someone is in the way and only stops when cornered.
pub const GREEDY_DEMONSTRATOR: &str = "\
if start == GoAlone && norm(p_h) < t0 [1,0,0] = 0.9: return Halt
elif start == GoAlone && norm(p_h) < t1 [1,0,0] = 2.0: return Pass
elif start == Pass && norm(p_h) > t2 [1,0,0] = 2.5: return GoAlone
elif start == Halt && norm(p_h) > t3 [1,0,0] = 1.3: return GoAlone
";

/// Waits at a closed door until it opens.
pub const DOOR_RULES: &str = "\
if start == GoAlone && s_d < d0 [0,0,0] = 0.5 && norm(p_d) < d1 [1,0,0] = 1.6: return Halt
elif start == Halt && s_d < d2 [0,0,0] = 0.5 && norm(p_d) < d3 [1,0,0] = 1.6: return Halt
";

/// The branches of each text in turn.
pub fn demonstrator(texts: &[&str]) -> Policy {
    let dom = DomainDefinition::social();
    Policy::new(
        texts
            .iter()
            .flat_map(|t| parse(t, &dom).expect("built-in demonstrator parses").branches)
            .collect(),
    )
}

/// Scales every threshold by an independent factor in `[1 - frac, 1 + frac]`.
pub fn jitter(p: &Policy, frac: f64, rng: &mut impl Rng) -> Policy {
    let mut out = p.clone();
    for b in &mut out.branches {
        for q in b.guard.params_mut() {
            if let Some(v) = q.value.as_mut() {
                *v *= 1.0 + rng.gen_range(-frac..=frac);
            }
        }
    }
    out
}

/// Traces of `policy` on the scenario under `seeds`, with thresholds
/// jittered per trial to imitate an inconsistent demonstrator.
pub fn demonstrate(sc: &Scenario, policy: &Policy, seeds: &[u64], frac: f64) -> Vec<Demonstration> {
    let mut out = Vec::new();
    for &s in seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(s ^ 0x5eed);
        let p = jitter(policy, frac, &mut rng);
        out.extend(run_trial(&sc.with_seed(s), &p, true).trace);
    }
    out
}

/// Features that trigger leaving `GoAlone`, with threshold ranges.
const TRIGGERS: &[(&str, &str, [f64; 2])] = &[
    ("norm(p_h)", "[1,0,0]", [1.2, 2.8]),
    ("p_h.x", "[1,0,0]", [1.2, 2.8]),
    ("freePathLength(p_l)", "[1,0,0]", [1.2, 3.0]),
];

/// Features that refine a trigger, with threshold ranges.
const REFINERS: &[(&str, &str, [f64; 2])] = &[
    ("abs(p_h.y)", "[1,0,0]", [0.3, 0.9]),
    ("v_h.x", "[1,-1,0]", [-0.4, 0.6]),
    ("norm(v_h)", "[1,-1,0]", [0.5, 1.0]),
    ("v_r.x - v_h.x", "[1,-1,0]", [0.6, 1.6]),
    ("dist(p_h, p_hl)", "[1,0,0]", [1.0, 3.0]),
];

/// A random policy of the generator's family: one or two branches leaving
/// `GoAlone` on a proximity trigger, each optionally refined by a second
/// literal, and one branch back to `GoAlone` with hysteresis.
pub fn random_policy(seed: u64) -> Policy {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut targets = ["Halt", "Follow", "Pass"];
    targets.shuffle(&mut rng);
    let n = rng.gen_range(1..=2);
    let mut text = String::new();
    let mut k = 0;
    let mut param = |rng: &mut ChaCha8Rng, dims: &str, r: [f64; 2]| {
        k += 1;
        let v = (rng.gen_range(r[0]..=r[1]) * 20.0).round() / 20.0;
        (format!("g{k} {dims} = {v:?}"), v)
    };
    let mut exits = Vec::new();
    for to in &targets[..n] {
        let (f, dims, r) = TRIGGERS[rng.gen_range(0..TRIGGERS.len())];
        let (p, v) = param(&mut rng, dims, r);
        let mut guard = format!("start == GoAlone && {f} < {p}");
        if rng.gen_bool(0.5) {
            let (g, gd, gr) = REFINERS[rng.gen_range(0..REFINERS.len())];
            let rel = if rng.gen_bool(0.5) { ">" } else { "<" };
            let (q, _) = param(&mut rng, gd, gr);
            guard.push_str(&format!(" && {g} {rel} {q}"));
        }
        let kw = if text.is_empty() { "if" } else { "elif" };
        text.push_str(&format!("{kw} {guard}: return {to}\n"));
        exits.push((to, f, dims, v));
    }
    for (to, f, dims, v) in exits {
        let (p, _) = param(&mut rng, dims, [v + 0.5, v + 1.5]);
        text.push_str(&format!("elif start == {to} && {f} > {p}: return GoAlone\n"));
    }
    parse(&text, &DomainDefinition::social()).expect("generated policy parses")
}

/// Up to ten labelled demonstrations of waiting at a closed door, as a user
/// would give them by rewinding a run of the door-aware demonstrator: two
/// approaches far from the door, one resume far from it, two points where it
/// should have started halting, two while waiting, two as the door opens
/// and one passing through the open door.
pub fn door_demos(seed: u64) -> Vec<Demonstration> {
    let sc = door_hallway().with_seed(seed);
    let trace = run_trial(&sc, &demonstrator(&[DOOR_RULES, NICE_DEMONSTRATOR]), true).trace;
    let dom = DomainDefinition::social();
    let near = crate::lang::parse_predicate("norm(p_d) < r [1,0,0] = 1.6", &dom).expect("parses");
    let d = |x: &Demonstration| x.state.vector("p_d").map_or(f64::INFINITY, |p| p[0].hypot(p[1]));
    let closed = |x: &Demonstration| x.state.scalar("s_d") == Some(0.0);
    let act = |x: &Demonstration, a: &str, b: &str| x.prev.as_str() == a && x.next.as_str() == b;
    let mut out = Vec::new();
    let mut relabel = |x: &Demonstration, prev: &str, next: &str| {
        let mut y = x.clone();
        y.prev = crate::lang::Action::new(prev);
        y.next = crate::lang::Action::new(next);
        y.source = crate::demo::DemoSource::UiLabel;
        out.push(y);
    };
    // Approaching, still far. A stop there is not for the door, so a robot
    // halted at the first point should move on.
    for target in [5.0, 3.0] {
        if let Some(x) = trace
            .iter()
            .filter(|x| act(x, "GoAlone", "GoAlone") && closed(x))
            .min_by(|a, b| (d(a) - target).abs().total_cmp(&(d(b) - target).abs()))
        {
            relabel(x, "GoAlone", "GoAlone");
            if target == 5.0 {
                relabel(x, "Halt", "GoAlone");
            }
        }
    }
    // Where halting should start: the switch and a little before it.
    let near_closed =
        |x: &Demonstration| closed(x) && eval_predicate(&near, &x.prev, &x.state).unwrap_or(false);
    if let Some(i) = trace.iter().position(|x| act(x, "GoAlone", "Halt") && near_closed(x)) {
        for back in [0, 4] {
            if let Some(x) = i.checked_sub(back).map(|j| &trace[j]) {
                relabel(x, "GoAlone", "Halt");
            }
        }
    }
    // Waiting.
    let waiting: Vec<&Demonstration> = trace
        .iter()
        .filter(|x| act(x, "Halt", "Halt") && near_closed(x))
        .collect();
    for x in [waiting.first(), waiting.last()].into_iter().flatten() {
        relabel(x, "Halt", "Halt");
    }
    // The door opens.
    if let Some(i) = trace.iter().position(|x| x.prev.as_str() == "Halt" && !closed(x) && d(x) < 2.0) {
        relabel(&trace[i], "Halt", "GoAlone");
        if let Some(x) = trace.get(i + 1) {
            relabel(x, "Halt", "GoAlone");
        }
        if let Some(x) = trace[i..].iter().find(|x| act(x, "GoAlone", "GoAlone") && d(x) < 1.0) {
            relabel(x, "GoAlone", "GoAlone");
        }
    }
    out.truncate(10);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::typecheck_policy;

    #[test]
    fn demonstrators_typecheck() {
        let dom = DomainDefinition::social();
        for t in [NICE_DEMONSTRATOR, GREEDY_DEMONSTRATOR] {
            typecheck_policy(&demonstrator(&[t]), &dom).unwrap();
        }
        for s in 0..20 {
            let p = random_policy(s);
            typecheck_policy(&p, &dom).unwrap();
            assert!(p.params().len() <= 6);
            assert!(p.branches.iter().all(|b| b.guard.params().len() <= 2));
        }
    }

    #[test]
    fn door_aware_demonstrator_gets_through() {
        let p = demonstrator(&[DOOR_RULES, NICE_DEMONSTRATOR]);
        let t = run_trial(&door_hallway().with_seed(3), &p, false);
        assert!(t.metrics.success, "{:?}", t.metrics);
    }

    #[test]
    fn door_demo_set_is_small_and_complete() {
        let demos = door_demos(1);
        assert!(demos.len() <= 10 && demos.len() >= 8, "{}", demos.len());
        for (a, b) in [("GoAlone", "Halt"), ("Halt", "Halt"), ("Halt", "GoAlone"), ("GoAlone", "GoAlone")] {
            assert!(demos.iter().any(|x| x.prev.as_str() == a && x.next.as_str() == b), "{a}->{b}");
        }
    }
}
