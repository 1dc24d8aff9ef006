use std::sync::Arc;

use idips::demo::{find_predicates, Demonstration, LocalizedFault};
use idips::dim::Dimension;
use idips::eval::{eval_predicate, score, Example, WorldState};
use idips::lang::{parse, split_action_guard, typecheck_predicate, AspType, Predicate, Value};
use idips::synth::{enum_exprs, repair, synth_predicate, synthesize, RepairKind, SynthConfig};
use idips::{Action, DomainDefinition};

/// Every vector far ahead, velocities zero, `p_h` at `(x, y)`.
fn world(x: f64, y: f64) -> Arc<WorldState> {
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
    w.set("p_h", Value::Vector([x, y]));
    Arc::new(w)
}

fn fault(pos: &[Arc<WorldState>], neg: &[Arc<WorldState>], predicate: Predicate) -> LocalizedFault {
    let ex = |w: &Arc<WorldState>| Example::new(Action::new("GoAlone"), w.clone());
    LocalizedFault {
        from: Action::new("GoAlone"),
        to: Action::new("Halt"),
        predicate,
        branch: Some(0),
        canonical: false,
        pos: pos.iter().map(ex).collect(),
        neg: neg.iter().map(ex).collect(),
    }
}

#[test]
fn depth_one_length_count_matches_hand_count() {
    // Six length vectors; each feeds freePathLength, norm, x and y, and the
    // 15 unordered pairs feed dist.
    let dom = DomainDefinition::social();
    let got = enum_exprs(&dom, AspType::Scalar(Dimension::LENGTH), 1, &[], 100_000).unwrap();
    assert_eq!(got.len(), 6 * 4 + 15);
}

#[test]
fn band_needs_a_conjunction() {
    let dom = DomainDefinition::social();
    let pos: Vec<_> = [1.5, 2.0, 2.5].iter().map(|&x| world(x, 0.0)).collect();
    let neg: Vec<_> = [0.5, 0.8, 4.0, 5.0].iter().map(|&x| world(x, 0.0)).collect();
    let f = fault(&pos, &neg, Predicate::Blank);
    let c = synth_predicate(&dom, &f, &SynthConfig::default(), &Predicate::Blank).unwrap();
    assert_eq!(c.score, 1.0, "{}", c.predicate);
    assert_eq!(c.predicate.literal_count(), 2, "{}", c.predicate);
    assert!(matches!(c.predicate, Predicate::And(..)), "{}", c.predicate);
    typecheck_predicate(&c.predicate, &dom).unwrap();
}

#[test]
fn false_positives_are_strengthened() {
    let dom = DomainDefinition::social();
    // `norm(p_h) < 3` also fires for humans far to the side.
    let b = parse("if norm(p_h) < th0 [1,0,0] = 3.0: return Halt", &dom)
        .unwrap()
        .branches[0]
        .guard
        .clone();
    let pos: Vec<_> = [(1.0, 0.0), (2.0, 0.2)].iter().map(|&(x, y)| world(x, y)).collect();
    let neg: Vec<_> = [(0.3, 2.5), (0.5, -2.6), (5.0, 0.0)]
        .iter()
        .map(|&(x, y)| world(x, y))
        .collect();
    let f = fault(&pos, &neg, b.clone());
    let r = repair(&dom, &f, &SynthConfig::default()).unwrap();
    assert_eq!(r.kind, RepairKind::Strengthen);
    assert_eq!(r.after, 1.0, "{}", r.predicate);
    match &r.predicate {
        Predicate::And(lhs, _) => assert_eq!(**lhs, b),
        other => panic!("{other}"),
    }
    for e in f.pos.iter().chain(&f.neg) {
        let new = eval_predicate(&r.predicate, &e.prev, &e.world).unwrap();
        let old = eval_predicate(&b, &e.prev, &e.world).unwrap();
        assert!(!new || old);
    }
}

#[test]
fn false_predicate_is_replaced_by_a_disjunct() {
    let dom = DomainDefinition::social();
    let pos: Vec<_> = [1.0, 1.5].iter().map(|&x| world(x, 0.0)).collect();
    let neg: Vec<_> = [4.0, 6.0].iter().map(|&x| world(x, 0.0)).collect();
    let f = fault(&pos, &neg, Predicate::False);
    let r = repair(&dom, &f, &SynthConfig::default()).unwrap();
    assert_eq!(r.kind, RepairKind::Weaken);
    assert_eq!(r.after, 1.0);
    // `false || x` folds to `x`.
    assert_eq!(r.predicate.literal_count(), 1, "{}", r.predicate);
    assert_eq!(score(&r.predicate, &f.pos, &f.neg), 1.0);
}

#[test]
fn single_transition_gives_one_branch() {
    let dom = DomainDefinition::social();
    let mut demos = Vec::new();
    for (i, x) in [0.8, 1.2, 3.0, 4.0, 6.0].iter().enumerate() {
        let next = if i < 2 { "Halt" } else { "GoAlone" };
        demos.push(Demonstration::new(Action::new("GoAlone"), world(*x, 0.0), Action::new(next)));
    }
    let p = synthesize(&demos, None, &dom, &SynthConfig::default()).unwrap();
    assert_eq!(p.branches.len(), 1);
    assert_eq!(p.branches[0].action.as_str(), "Halt");
    let (a, _) = split_action_guard(&p.branches[0].guard).unwrap();
    assert_eq!(a.as_str(), "GoAlone");
    assert!(find_predicates(&demos, &p).iter().all(|f| f.score() == 1.0));
}

#[test]
fn conflicting_demos_do_not_abort() {
    let dom = DomainDefinition::social();
    let s = world(1.0, 0.0);
    let demos = vec![
        Demonstration::new(Action::new("GoAlone"), s.clone(), Action::new("Halt")),
        Demonstration::new(Action::new("GoAlone"), s.clone(), Action::new("Pass")),
        Demonstration::new(Action::new("GoAlone"), world(5.0, 0.0), Action::new("GoAlone")),
    ];
    let p = synthesize(&demos, None, &dom, &SynthConfig::default()).unwrap();
    let scores: Vec<f64> = find_predicates(&demos, &p).iter().map(|f| f.score()).collect();
    assert!(scores.iter().all(|&s| s < 1.0 && s > 0.5), "{scores:?}");
}
