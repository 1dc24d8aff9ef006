//! Property tests for invariants that cut across modules.

use std::sync::Arc;

use idips::demo::{agreement, find_predicates, Demonstration, LocalizedFault};
use idips::dim::Dimension;
use idips::eval::{eval_predicate, partial_eval, score, Example, WorldState};
use idips::lang::{parse, parse_expr, AspType, Param, Predicate, Value};
use idips::sim::{extract_world, gen, run_trial, step, SimSnapshot};
use idips::synth::{repair, RepairKind, SynthConfig};
use idips::{Action, DomainDefinition, Expr};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn world(h: [f64; 2], v: [f64; 2]) -> Arc<WorldState> {
    let dom = DomainDefinition::social();
    let mut w = WorldState::new();
    for (n, t) in &dom.inputs {
        let v = match t {
            AspType::Vector(d) if *d == Dimension::LENGTH => Value::Vector([10.0, 0.0]),
            AspType::Vector(_) => Value::Vector([0.0, 0.0]),
            _ => Value::Scalar(0.0),
        };
        w.set(n, v);
    }
    w.set("p_h", Value::Vector(h));
    w.set("v_h", Value::Vector(v));
    Arc::new(w)
}

const FEATURES: &[&str] = &["norm(p_h)", "p_h.x", "p_h.y", "v_h.x", "norm(v_h)", "dist(p_h, p_g)"];
const ACTIONS: &[&str] = &["GoAlone", "Halt", "Pass", "Follow"];

fn expr(i: usize) -> Expr {
    parse_expr(FEATURES[i], &DomainDefinition::social()).unwrap()
}

/// Predicates over a few features, each literal with its own threshold.
fn predicate() -> impl Strategy<Value = Predicate> {
    let leaf = prop_oneof![
        Just(Predicate::True),
        Just(Predicate::False),
        (0..ACTIONS.len()).prop_map(|a| Predicate::ActionEq(Action::new(ACTIONS[a]))),
        (0..FEATURES.len(), any::<bool>(), -6.0f64..6.0).prop_map(|(f, gt, t)| {
            let p = Param::new("t", Dimension::new(0, 0, 0), t);
            if gt {
                Predicate::gt(expr(f), p)
            } else {
                Predicate::lt(expr(f), p)
            }
        }),
    ];
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Predicate::and(a, b)),
            (inner.clone(), inner).prop_map(|(a, b)| Predicate::or(a, b)),
        ]
    })
    .prop_map(|mut p| {
        for (i, q) in p.params_mut().into_iter().enumerate() {
            q.name = format!("t{i}");
        }
        p
    })
}

fn vec2() -> impl Strategy<Value = [f64; 2]> {
    [-5.0f64..5.0, -5.0f64..5.0]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn residual_agrees_with_direct_evaluation(p in predicate(), h in vec2(), v in vec2(), a in 0..ACTIONS.len()) {
        let w = world(h, v);
        let prev = Action::new(ACTIONS[a]);
        let theta: std::collections::BTreeMap<String, f64> =
            p.params().iter().map(|q| (q.name.clone(), q.value.unwrap())).collect();
        let r = partial_eval(&p, &prev, &w).unwrap();
        prop_assert_eq!(r.eval(&|n| theta.get(n).copied()), eval_predicate(&p, &prev, &w).unwrap());
    }

    #[test]
    fn printed_policies_parse_back(seed in 0u64..500, jitter_seed in any::<u64>()) {
        let dom = DomainDefinition::social();
        let p = gen::jitter(&gen::random_policy(seed), 0.3, &mut ChaCha8Rng::seed_from_u64(jitter_seed));
        let text = p.to_string();
        let q = parse(&text, &dom).unwrap();
        prop_assert_eq!(q.to_string(), text);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Repair never lowers the score, `b && x` only removes examples from
    /// `b` and `b || x` only adds them.
    #[test]
    fn repair_is_monotone_and_conservative(
        start in predicate(),
        points in prop::collection::vec((vec2(), vec2(), any::<bool>()), 2..24),
    ) {
        let dom = DomainDefinition::social();
        let ex = |h, v| Example::new(Action::new("GoAlone"), world(h, v));
        let f = LocalizedFault {
            from: Action::new("GoAlone"),
            to: Action::new("Halt"),
            predicate: start.clone(),
            branch: Some(0),
            canonical: false,
            pos: points.iter().filter(|x| x.2).map(|x| ex(x.0, x.1)).collect(),
            neg: points.iter().filter(|x| !x.2).map(|x| ex(x.0, x.1)).collect(),
        };
        let r = repair(&dom, &f, &SynthConfig::default()).unwrap();
        let before = score(&start, &f.pos, &f.neg);
        prop_assert!(r.after >= before);
        prop_assert_eq!(r.after, score(&r.predicate, &f.pos, &f.neg));
        for e in f.pos.iter().chain(&f.neg) {
            let old = eval_predicate(&start, &e.prev, &e.world).unwrap();
            let new = eval_predicate(&r.predicate, &e.prev, &e.world).unwrap();
            match r.kind {
                RepairKind::Strengthen => prop_assert!(!new || old),
                RepairKind::Weaken => prop_assert!(!old || new),
                RepairKind::None => prop_assert_eq!(old, new),
                RepairKind::Both => {}
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn trials_are_reproducible_and_resumable(seed in any::<u64>(), cut in 1u64..200) {
        let sc = gen::hallway().with_seed(seed);
        let p = gen::demonstrator(&[gen::NICE_DEMONSTRATOR]);
        let a = run_trial(&sc, &p, true);
        let b = run_trial(&sc, &p, true);
        prop_assert_eq!(&a.metrics, &b.metrics);
        prop_assert_eq!(&a.last, &b.last);
        // Replaying the recorded actions from the start reaches the same
        // state at every tick.
        let mut s = SimSnapshot::initial(&sc);
        for d in a.trace.iter().take(cut as usize) {
            prop_assert_eq!(extract_world(&s, &sc), (*d.state).clone());
            s = step(&s, &d.next, &sc);
        }
    }

    /// A policy explains its own trace perfectly. Localization judges each
    /// branch alone, so a branch may accept a state its own transition was
    /// not taken in, but only when an earlier branch claimed it first.
    #[test]
    fn generator_policies_fit_their_traces(seed in 0u64..1000) {
        let p = gen::random_policy(seed);
        let demos: Vec<Demonstration> = gen::demonstrate(&gen::hallway(), &p, &[seed], 0.0);
        prop_assert_eq!(agreement(&p, &demos), 1.0);
        let holds = |i: usize, e: &Example| eval_predicate(&p.branches[i].guard, &e.prev, &e.world).unwrap();
        for f in find_predicates(&demos, &p) {
            let i = f.branch.unwrap();
            prop_assert!(f.pos.iter().all(|e| holds(i, e)), "{}->{}", f.from, f.to);
            for e in f.neg.iter().filter(|e| holds(i, e)) {
                prop_assert!((0..i).any(|j| holds(j, e)), "{}->{} unshadowed", f.from, f.to);
            }
        }
    }
}
