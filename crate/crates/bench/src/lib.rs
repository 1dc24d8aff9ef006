//! Shared inputs for the benchmarks.

use idips::demo::Demonstration;
use idips::sim::gen;
use idips::Policy;

pub fn nice() -> Policy {
    gen::demonstrator(&[gen::NICE_DEMONSTRATOR])
}

/// Noise-free nice demonstrations from `trials` hallway runs.
pub fn nice_demos(trials: u64) -> Vec<Demonstration> {
    gen::demonstrate(&gen::hallway(), &nice(), &(1000..1000 + trials).collect::<Vec<_>>(), 0.0)
}
