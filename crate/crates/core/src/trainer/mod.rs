//! Multi-task optimization: negative sampling, loss assembly, the reversal
//! schedule, early stopping, and checkpoints.

mod checkpoint;
mod fit;
mod objective;
mod sampling;

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointMeta, CHECKPOINT_MAGIC};
pub use fit::{fit, EarlyStopper, EpochRecord, FitOutcome, StopDecision, TrainHistory};
pub use objective::{is_trainable, objective, LossBreakdown};
pub use sampling::{sample_negatives, NegativeSampler};

use serde::{Deserialize, Serialize};

use crate::corpus::{build_graph, Domain, DomainGraph, SplitDataset};
use crate::error::{Error, Result};
use crate::model::{Grl, ModelDims, ModelState};
use crate::numcore::{adam_step, AdamConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Positives per step, taken from the larger domain; the smaller domain is
    /// spread over the same number of steps.
    pub batch_size: usize,
    pub negatives_per_positive: usize,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub seed: u64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    /// Cut-off of the validation metrics used for early stopping.
    pub eval_k: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            batch_size: 1024,
            negatives_per_positive: 1,
            max_epochs: 1000,
            patience: 10,
            seed: 2024,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            eval_k: 20,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning_rate must be positive, got {}", self.learning_rate)));
        }
        if self.batch_size == 0 || self.negatives_per_positive == 0 {
            return Err(Error::Config("batch_size and negatives_per_positive must be positive".into()));
        }
        if self.max_epochs == 0 || self.patience == 0 || self.eval_k == 0 {
            return Err(Error::Config("max_epochs, patience and eval_k must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) {
            return Err(Error::Config("Adam betas must lie in [0, 1)".into()));
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig { lr: self.learning_rate, beta1: self.adam_beta1, beta2: self.adam_beta2, eps: self.adam_eps }
    }
}

/// A labelled (user, item) pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub user: usize,
    pub item: usize,
    pub label: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainBatch {
    pub x: Vec<Sample>,
    pub y: Vec<Sample>,
}

impl TrainBatch {
    pub fn domain(&self, d: Domain) -> &[Sample] {
        match d {
            Domain::X => &self.x,
            Domain::Y => &self.y,
        }
    }

    pub fn domain_mut(&mut self, d: Domain) -> &mut Vec<Sample> {
        match d {
            Domain::X => &mut self.x,
            Domain::Y => &mut self.y,
        }
    }
}

/// A split together with its two normalized training graphs.
#[derive(Debug, Clone)]
pub struct TrainingData {
    pub split: SplitDataset,
    pub graphs: [DomainGraph; 2],
}

impl TrainingData {
    pub fn new(split: SplitDataset) -> Result<Self> {
        let graphs = [
            build_graph(&split.x.train, split.num_users, split.x.num_items)?,
            build_graph(&split.y.train, split.num_users, split.y.num_items)?,
        ];
        Ok(Self { split, graphs })
    }

    pub fn graph_refs(&self) -> [&DomainGraph; 2] {
        [&self.graphs[0], &self.graphs[1]]
    }

    pub fn dims(&self) -> ModelDims {
        ModelDims {
            num_users: self.split.num_users,
            num_items_x: self.split.x.num_items,
            num_items_y: self.split.y.num_items,
        }
    }
}

/// Warm-up schedule of the reversal strength: `λ_max (2 / (1 + e^{−10p}) − 1)`.
pub fn grl_lambda(progress: f64, lambda_max: f64) -> f64 {
    let p = progress.clamp(0.0, 1.0);
    lambda_max * (2.0 / (1.0 + (-10.0 * p).exp()) - 1.0)
}

/// Forward, backward, and one Adam update on a batch.
pub fn training_step(
    model: &mut ModelState,
    graphs: [&DomainGraph; 2],
    batch: &TrainBatch,
    adam: &AdamConfig,
    grl_strength: f64,
) -> Result<LossBreakdown> {
    if batch.x.is_empty() || batch.y.is_empty() {
        return Err(Error::Config("training batch must contain samples from both domains".into()));
    }
    let (losses, grads) = objective(&model.config, &model.store, graphs, batch, Grl::Reverse(grl_strength), true)?;
    if !losses.is_finite() {
        return Err(Error::Numeric(format!(
            "loss (rec {}, cls {}, reg {}, total {})",
            losses.rec,
            losses.cls(),
            losses.reg,
            losses.total
        )));
    }
    for (p, g) in model.store.iter_mut().zip(grads.expect("gradient requested")) {
        p.grad = g;
    }
    adam_step(&mut model.store, adam)?;
    Ok(losses)
}
