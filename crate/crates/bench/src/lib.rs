//! Fixtures shared by the benchmarks.

use forgesim::{ForgedModel, ModelSpec, Result};

/// A seeded model on one of the benchmark Hamiltonians.
pub fn fixture(spec: ModelSpec, layers: usize, seed: u64) -> Result<ForgedModel> {
    ForgedModel::from_spec(spec, layers, 32, 0.5, seed)
}

pub fn tfim_1d() -> ModelSpec {
    ModelSpec::Tfim1d { n_total: 8, h_field: 1.0 }
}
