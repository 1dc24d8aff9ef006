use std::collections::BTreeMap;

use idips::solver::oracle::{dense_grid_best, random_instance, LATTICE};
use idips::solver::{max_sat, srtr_optimize, SolverConfig};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn max_sat_matches_dense_grid(seed in any::<u64>()) {
        let inst = random_instance(seed, 3, 20);
        let r = max_sat(&inst, &SolverConfig::default()).unwrap();
        prop_assert_eq!(r.satisfied_weight, dense_grid_best(&inst));
    }

    #[test]
    fn result_counts_are_reevaluated(seed in any::<u64>()) {
        let inst = random_instance(seed, 4, 20);
        let r = max_sat(&inst, &SolverConfig::default()).unwrap();
        prop_assert_eq!((r.satisfied_weight, r.satisfied_count), inst.evaluate(&r.assignment));
    }

    #[test]
    fn perturbing_within_cell_keeps_count(seed in any::<u64>(), frac in 0.01f64..0.99) {
        let inst = random_instance(seed, 3, 20);
        let r = max_sat(&inst, &SolverConfig::default()).unwrap();
        // Observed values sit on the lattice and results never do, so the
        // open lattice interval around each value lies inside its cell.
        let moved: BTreeMap<String, f64> = r
            .assignment
            .iter()
            .map(|(k, v)| {
                let cell = (v / LATTICE).floor() * LATTICE;
                (k.clone(), cell + frac * LATTICE)
            })
            .collect();
        prop_assert_eq!(inst.evaluate(&moved).1, r.satisfied_count);
    }

    #[test]
    fn srtr_never_sacrifices_satisfaction(seed in any::<u64>()) {
        let inst = random_instance(seed, 3, 20);
        let cfg = SolverConfig::default();
        let a = max_sat(&inst, &cfg).unwrap();
        let b = srtr_optimize(&inst, &cfg).unwrap();
        prop_assert_eq!(a.satisfied_weight, b.satisfied_weight);
    }

    #[test]
    fn adding_a_constraint_is_bounded(seed in any::<u64>(), extra in any::<u64>()) {
        let cfg = SolverConfig::default();
        let inst = random_instance(seed, 3, 12);
        let donor = random_instance(extra, 3, 1);
        let mut bigger = inst.clone();
        let mut c = donor.constraints[0].clone();
        // Keep the extra constraint on parameters the instance has.
        let n = inst.params.len();
        c.constraint.formula = rename(&c.constraint.formula, n);
        let w = c.weight;
        bigger.constraints.push(c);
        let before = max_sat(&inst, &cfg).unwrap().satisfied_weight;
        let after = max_sat(&bigger, &cfg).unwrap().satisfied_weight;
        prop_assert!(after >= before);
        prop_assert!(after <= before + w);
    }
}

fn rename(f: &idips::eval::ResidualFormula, n: usize) -> idips::eval::ResidualFormula {
    use idips::eval::ResidualFormula as F;
    match f {
        F::Leaf { observed, rel, param } => {
            let i: usize = param[1..].parse().unwrap();
            F::Leaf { observed: *observed, rel: *rel, param: format!("p{}", i % n) }
        }
        F::And(a, b) => F::And(Box::new(rename(a, n)), Box::new(rename(b, n))),
        F::Or(a, b) => F::Or(Box::new(rename(a, n)), Box::new(rename(b, n))),
        F::Const(b) => F::Const(*b),
    }
}
