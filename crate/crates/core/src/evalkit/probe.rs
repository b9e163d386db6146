use rand::seq::SliceRandom;

use crate::corpus::Domain;
use crate::error::{Error, Result};
use crate::model::{bce_with_logits, domain_classify, domain_classify_backward, ClassifierWeights, ModelState};
use crate::numcore::{adam_step, seeded_rng, AdamConfig, DenseMatrix, ParameterStore};
use crate::trainer::TrainingData;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeConfig {
    pub iterations: usize,
    pub learning_rate: f64,
    /// Fraction of users whose rows train the probe; the rest are scored.
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self { iterations: 300, learning_rate: 0.01, train_fraction: 0.8, seed: 17 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeResult {
    pub acc_specific: f64,
    pub acc_shared: f64,
}

/// Held-out accuracy of fresh domain classifiers trained on the frozen
/// specific and (fused) shared user embeddings.
pub fn disentanglement_probe(model: &ModelState, data: &TrainingData, cfg: &ProbeConfig) -> Result<ProbeResult> {
    let emb = model.embeddings(data.graph_refs())?;
    let (x, y) = (emb.domain(Domain::X), emb.domain(Domain::Y));
    let hidden = model.config.hidden_dim();
    Ok(ProbeResult {
        acc_specific: probe_accuracy(&x.specific, &y.specific, hidden, cfg)?,
        acc_shared: probe_accuracy(&x.enhanced, &y.enhanced, hidden, cfg)?,
    })
}

fn standardize(train: &DenseMatrix, rows: &mut [&mut DenseMatrix]) {
    let n = train.rows() as f64;
    let mean: Vec<f64> = train.column_sums().iter().map(|s| s / n).collect();
    let mut var = vec![0.0; train.cols()];
    for r in train.iter_rows() {
        for (v, (x, m)) in var.iter_mut().zip(r.iter().zip(&mean)) {
            *v += (x - m) * (x - m) / n;
        }
    }
    let std: Vec<f64> = var.iter().map(|v| v.sqrt().max(1e-12)).collect();
    for m in rows.iter_mut() {
        for r in 0..m.rows() {
            for (c, x) in m.row_mut(r).iter_mut().enumerate() {
                *x = (*x - mean[c]) / std[c];
            }
        }
    }
}

/// Trains a fresh two-layer classifier to tell row `u` of `from_x` (label 0)
/// from row `u` of `from_y` (label 1) on a random subset of users, and returns
/// its accuracy on the remaining users. A zero logit earns half credit.
pub fn probe_accuracy(from_x: &DenseMatrix, from_y: &DenseMatrix, hidden: usize, cfg: &ProbeConfig) -> Result<f64> {
    if from_x.shape() != from_y.shape() {
        return Err(Error::shape("probe_accuracy", from_x.shape(), from_y.shape()));
    }
    let n = from_x.rows();
    if n < 2 {
        return Err(Error::Evaluation("probe needs at least two users".into()));
    }
    let mut rng = seeded_rng(cfg.seed);
    let mut users: Vec<usize> = (0..n).collect();
    users.shuffle(&mut rng);
    let n_train = ((n as f64 * cfg.train_fraction).floor() as usize).clamp(1, n - 1);
    let (train_users, held_users) = users.split_at(n_train);

    let mut train = from_x.gather_rows(train_users).vstack(&from_y.gather_rows(train_users))?;
    let mut held_x = from_x.gather_rows(held_users);
    let mut held_y = from_y.gather_rows(held_users);
    let reference = train.clone();
    standardize(&reference, &mut [&mut train, &mut held_x, &mut held_y]);
    let labels: Vec<f64> = (0..2 * n_train).map(|r| if r < n_train { 0.0 } else { 1.0 }).collect();

    let width = from_x.cols();
    let mut store = ParameterStore::new();
    store.insert("w1", DenseMatrix::uniform(width, hidden, 0.5 / (hidden as f64).sqrt(), &mut rng))?;
    store.insert("b1", DenseMatrix::zeros(1, hidden))?;
    store.insert("w2", DenseMatrix::uniform(hidden, 1, 0.5, &mut rng))?;
    store.insert("b2", DenseMatrix::zeros(1, 1))?;
    let adam = AdamConfig { lr: cfg.learning_rate, ..Default::default() };
    let weights = |s: &ParameterStore| -> (DenseMatrix, DenseMatrix, DenseMatrix, DenseMatrix) {
        (s.value(0).clone(), s.value(1).clone(), s.value(2).clone(), s.value(3).clone())
    };

    for _ in 0..cfg.iterations {
        let (w1, b1, w2, b2) = weights(&store);
        let w = ClassifierWeights { w1: &w1, b1: &b1, w2: &w2, b2: &b2 };
        let (logits, cache) = domain_classify(&w, &train)?;
        let (_, d_logits) = bce_with_logits(&logits, &labels)?;
        let (_, g) = domain_classify_backward(&w, &cache, &d_logits)?;
        for (p, g) in store.iter_mut().zip([g.w1, g.b1, g.w2, g.b2]) {
            p.grad = g;
        }
        adam_step(&mut store, &adam)?;
    }

    let (w1, b1, w2, b2) = weights(&store);
    let w = ClassifierWeights { w1: &w1, b1: &b1, w2: &w2, b2: &b2 };
    let (lx, _) = domain_classify(&w, &held_x)?;
    let (ly, _) = domain_classify(&w, &held_y)?;
    let credit = |z: f64, want_positive: bool| {
        if z == 0.0 {
            0.5
        } else if (z > 0.0) == want_positive {
            1.0
        } else {
            0.0
        }
    };
    let correct: f64 =
        lx.iter().map(|&z| credit(z, false)).sum::<f64>() + ly.iter().map(|&z| credit(z, true)).sum::<f64>();
    Ok(correct / (lx.len() + ly.len()) as f64)
}
