//! Training and evaluation engine for dual-target cross-domain
//! recommendation with disentangled user embeddings.
//!
//! The pipeline runs `corpus` (ingest, align, split, graphs) → `model`
//! (forward and hand-written backward) → `trainer` (multi-task Adam loop with
//! gradient reversal) → `evalkit` (full-ranking metrics, ablations, probe).

pub mod corpus;
pub mod error;
pub mod evalkit;
pub mod model;
pub mod numcore;
pub mod synthetic;
pub mod trainer;

pub use error::{CheckpointErrorKind, Error, Result};
