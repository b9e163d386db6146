use std::fmt::Write as _;
use std::fs;
use std::ops::Range;
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;

use crate::corpus::Domain;
use crate::error::{Error, Result};
use crate::evalkit::{evaluate, EvalReport, EvalSplit};
use crate::model::ModelState;
use crate::numcore::{seeded_rng, DenseMatrix};
use crate::trainer::{
    grl_lambda, training_step, LossBreakdown, NegativeSampler, Sample, TrainBatch, TrainConfig, TrainingData,
};

// Keeps the sampling stream apart from the initialization stream when both
// come from the same configured seed.
const SAMPLING_STREAM: u64 = 0x5851_f42d_4c95_7f2d;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StopDecision {
    pub improved: bool,
    pub stop: bool,
}

/// Patience-based early stopping on a metric where larger is better.
#[derive(Debug, Clone)]
pub struct EarlyStopper {
    patience: usize,
    best: f64,
    best_epoch: usize,
    since_best: usize,
}

impl EarlyStopper {
    pub fn new(patience: usize) -> Self {
        Self { patience, best: f64::NEG_INFINITY, best_epoch: 0, since_best: 0 }
    }

    /// Only a strict improvement resets the patience counter.
    pub fn observe(&mut self, epoch: usize, metric: f64) -> StopDecision {
        if metric > self.best {
            self.best = metric;
            self.best_epoch = epoch;
            self.since_best = 0;
            StopDecision { improved: true, stop: false }
        } else {
            self.since_best += 1;
            StopDecision { improved: false, stop: self.since_best >= self.patience }
        }
    }

    pub fn best(&self) -> f64 {
        self.best
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    /// Starts at 1.
    pub epoch: usize,
    /// Mean over the epoch's steps.
    pub losses: LossBreakdown,
    pub valid_recall: [f64; 2],
    pub valid_ndcg: [f64; 2],
    /// Reversal strength at the last step of the epoch.
    pub grl_lambda: f64,
    pub lambda1: f64,
    pub wall_secs: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainHistory {
    pub records: Vec<EpochRecord>,
}

impl TrainHistory {
    pub const HEADER: &'static str =
        "epoch\tl_rec\tl_cls\tl_reg\tl_total\tlambda1\tgrl_lambda\tx_recall\tx_ndcg\ty_recall\ty_ndcg";

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Tab-separated, one epoch per line. Wall time is left out so that
    /// identical runs give identical files.
    pub fn to_tsv(&self) -> String {
        let mut s = String::from(Self::HEADER);
        s.push('\n');
        for r in &self.records {
            let l = &r.losses;
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.epoch,
                l.rec,
                l.cls(),
                l.reg,
                l.total,
                r.lambda1,
                r.grl_lambda,
                r.valid_recall[0],
                r.valid_ndcg[0],
                r.valid_recall[1],
                r.valid_ndcg[1]
            );
        }
        s
    }

    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_tsv()).map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone)]
pub struct FitOutcome {
    /// Parameters of the best validation epoch.
    pub model: ModelState,
    pub history: TrainHistory,
    pub best_epoch: usize,
    pub best_report: EvalReport,
}

// Positives of step `s` out of `steps`: an even slice, or a single cycled
// positive when the domain has fewer positives than steps.
fn chunk(n: usize, s: usize, steps: usize) -> Range<usize> {
    if n >= steps {
        s * n / steps..(s + 1) * n / steps
    } else {
        s % n..s % n + 1
    }
}

/// Trains until validation NDCG (mean of both domains) stops improving for
/// `patience` epochs or `max_epochs` is reached, and returns the best snapshot.
pub fn fit(mut model: ModelState, data: &TrainingData, cfg: &TrainConfig) -> Result<FitOutcome> {
    cfg.validate()?;
    let graphs = data.graph_refs();
    let adam = cfg.adam();
    let samplers = Domain::BOTH.map(|d| NegativeSampler::for_domain(&data.split, d));
    let mut positives = Domain::BOTH.map(|d| data.split.domain(d).train.clone());
    if positives.iter().any(|p| p.is_empty()) {
        return Err(Error::EmptyDataset("training split".into()));
    }
    let steps = positives.iter().map(|p| p.len()).max().unwrap_or(0).div_ceil(cfg.batch_size);
    let total_steps = (cfg.max_epochs * steps) as f64;
    let mut rng = seeded_rng(cfg.seed ^ SAMPLING_STREAM);

    let mut stopper = EarlyStopper::new(cfg.patience);
    let mut history = TrainHistory::default();
    let mut best: Option<(Vec<DenseMatrix>, EvalReport)> = None;
    let mut global_step = 0usize;

    for epoch in 1..=cfg.max_epochs {
        let start = Instant::now();
        let mut negatives: Vec<Vec<Sample>> = Vec::with_capacity(2);
        for d in Domain::BOTH {
            let p = &mut positives[d.index()];
            p.shuffle(&mut rng);
            negatives.push(samplers[d.index()].sample(p, cfg.negatives_per_positive, &mut rng)?);
        }
        let mut sum = LossBreakdown::default();
        let mut lambda = 0.0;
        for s in 0..steps {
            let mut batch = TrainBatch::default();
            for d in Domain::BOTH {
                let p = &positives[d.index()];
                let r = chunk(p.len(), s, steps);
                // Negatives are laid out per positive, in positive order.
                let n = cfg.negatives_per_positive;
                let rows = batch.domain_mut(d);
                rows.extend(p[r.clone()].iter().map(|it| Sample { user: it.user, item: it.item, label: 1.0 }));
                rows.extend_from_slice(&negatives[d.index()][r.start * n..r.end * n]);
            }
            lambda = grl_lambda(global_step as f64 / total_steps, model.config.grl_lambda_max);
            let l = training_step(&mut model, graphs, &batch, &adam, lambda)?;
            sum.rec += l.rec;
            sum.cls_specific += l.cls_specific;
            sum.cls_shared += l.cls_shared;
            sum.reg += l.reg;
            sum.total += l.total;
            global_step += 1;
        }
        let k = steps as f64;
        let losses = LossBreakdown {
            rec: sum.rec / k,
            cls_specific: sum.cls_specific / k,
            cls_shared: sum.cls_shared / k,
            reg: sum.reg / k,
            total: sum.total / k,
        };

        let report = evaluate(&model, data, EvalSplit::Validation, cfg.eval_k)?;
        let record = EpochRecord {
            epoch,
            losses,
            valid_recall: [report.domains[0].recall, report.domains[1].recall],
            valid_ndcg: [report.domains[0].ndcg, report.domains[1].ndcg],
            grl_lambda: lambda,
            lambda1: model.config.lambda1,
            wall_secs: start.elapsed().as_secs_f64(),
        };
        log::info!(
            "epoch {epoch}: loss {:.5} (rec {:.5}, cls {:.5}), valid ndcg@{} x {:.5} y {:.5}",
            losses.total,
            losses.rec,
            losses.cls(),
            cfg.eval_k,
            record.valid_ndcg[0],
            record.valid_ndcg[1]
        );
        history.records.push(record);

        let decision = stopper.observe(epoch, report.mean_ndcg());
        if decision.improved {
            best = Some((model.store.snapshot(), report));
        }
        if decision.stop {
            log::info!("early stop after epoch {epoch}; best epoch {}", stopper.best_epoch());
            break;
        }
    }

    let (values, best_report) = best.expect("at least one epoch runs");
    model.store.restore(&values)?;
    Ok(FitOutcome { model, history, best_epoch: stopper.best_epoch(), best_report })
}
