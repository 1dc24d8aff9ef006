//! Slow reference implementations used to check the solver.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::SolveInstance;
use crate::dim::Dimension;
use crate::eval::{ResidualConstraint, ResidualFormula};
use crate::lang::Relation;

/// Observed values of generated instances lie on this lattice.
pub const LATTICE: f64 = 0.5;
const LATTICE_MAX: i32 = 12;

fn random_formula(rng: &mut ChaCha8Rng, params: usize, leaves: usize) -> ResidualFormula {
    if leaves <= 1 {
        let rel = if rng.gen_bool(0.5) {
            Relation::Gt
        } else {
            Relation::Lt
        };
        return ResidualFormula::Leaf {
            observed: rng.gen_range(0..=LATTICE_MAX) as f64 * LATTICE,
            rel,
            param: format!("p{}", rng.gen_range(0..params)),
        };
    }
    let left = rng.gen_range(1..leaves);
    let a = Box::new(random_formula(rng, params, left));
    let b = Box::new(random_formula(rng, params, leaves - left));
    if rng.gen_bool(0.5) {
        ResidualFormula::And(a, b)
    } else {
        ResidualFormula::Or(a, b)
    }
}

/// A random instance with up to `max_params` parameters and `max_constraints`
/// constraints of one to three leaves each.
pub fn random_instance(seed: u64, max_params: usize, max_constraints: usize) -> SolveInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_params = rng.gen_range(1..=max_params);
    let n_cons = rng.gen_range(1..=max_constraints);
    let mut inst = SolveInstance::new();
    for k in 0..n_params {
        let prior = rng.gen_range(-2..=2 * LATTICE_MAX + 2) as f64 * 0.3;
        inst = inst.param(&format!("p{k}"), Dimension::LENGTH, Some(prior));
    }
    for _ in 0..n_cons {
        let leaves = rng.gen_range(1..=3);
        let formula = random_formula(&mut rng, n_params, leaves);
        let weight = if rng.gen_bool(0.8) { 1.0 } else { 2.0 };
        inst.push(
            ResidualConstraint {
                formula,
                target: rng.gen_bool(0.5),
            },
            weight,
        );
    }
    inst
}

/// Best satisfied weight over a dense grid for instances whose observed values
/// lie on [`LATTICE`]. The grid step is a quarter of the lattice spacing and is
/// offset by half a step, so no grid point coincides with an observed value.
pub fn dense_grid_best(inst: &SolveInstance) -> f64 {
    let step = LATTICE / 4.0;
    let lo = -1.0;
    let hi = LATTICE_MAX as f64 * LATTICE + 1.0;
    let points: Vec<f64> = (0..)
        .map(|k| lo + (k as f64 + 0.5) * step)
        .take_while(|x| *x < hi)
        .collect();
    let n = inst.params.len();
    let mut idx = vec![0usize; n];
    let mut best = f64::NEG_INFINITY;
    loop {
        let get = |name: &str| {
            let i: usize = name[1..].parse().ok()?;
            Some(points[idx[i]])
        };
        let w: f64 = inst
            .constraints
            .iter()
            .filter(|c| c.constraint.satisfied(&get))
            .map(|c| c.weight)
            .sum();
        best = best.max(w);
        let mut d = 0;
        loop {
            if d == n {
                return best;
            }
            idx[d] += 1;
            if idx[d] < points.len() {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}
