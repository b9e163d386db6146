//! Dense matrices, sparse propagation, parameters with Adam state, and a
//! finite-difference gradient checker. Everything is `f64`.

mod gradcheck;
mod matrix;
mod params;
mod sparse;

pub use gradcheck::{grad_check, GradCheckReport, ParamCheck};
pub use matrix::{dot, DenseMatrix};
pub use params::{adam_step, AdamConfig, Parameter, ParameterStore};
pub use sparse::{dense_adjacency, spmm};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The engine's seeded generator.
pub type EngineRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> EngineRng {
    ChaCha8Rng::seed_from_u64(seed)
}
