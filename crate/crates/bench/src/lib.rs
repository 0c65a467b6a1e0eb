//! Shared fixtures for the benchmarks in `benches/`.

use tfmseg::sim::generate;
use tfmseg::{GroundTruth, Scenario, SimScenario, TensorSeries};

/// A scenario-S1 series with three mode-specific changes.
pub fn fixture(t: usize, dims: &[usize], seed: u64) -> (TensorSeries, GroundTruth) {
    let sc = SimScenario::new(Scenario::S1, t, dims.to_vec()).with_seed(seed, 0);
    generate(&sc).expect("benchmark scenario is valid")
}
