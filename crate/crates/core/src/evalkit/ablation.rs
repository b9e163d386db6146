use std::fmt::Write as _;

use crate::corpus::Domain;
use crate::error::Result;
use crate::evalkit::{evaluate, EvalReport, EvalSplit};
use crate::model::{ModelConfig, ModelState, Variant};
use crate::numcore::seeded_rng;
use crate::trainer::{fit, FitOutcome, TrainConfig, TrainingData};

#[derive(Debug, Clone)]
pub struct AblationRow {
    pub variant: Variant,
    pub outcome: FitOutcome,
    pub report: EvalReport,
}

/// Trains every variant from the same seed on the same data and evaluates
/// the best snapshot of each on `split`.
pub fn run_ablation(
    data: &TrainingData,
    base: &ModelConfig,
    train: &TrainConfig,
    variants: &[Variant],
    split: EvalSplit,
    k: usize,
) -> Result<Vec<AblationRow>> {
    let mut rows = Vec::with_capacity(variants.len());
    for &variant in variants {
        let cfg = ModelConfig { variant, ..base.clone() };
        let model = ModelState::new(&cfg, data.dims(), &mut seeded_rng(train.seed))?;
        log::info!("ablation: training variant {variant}");
        let outcome = fit(model, data, train)?;
        let mut report = evaluate(&outcome.model, data, split, k)?;
        report.meta.seed = train.seed;
        rows.push(AblationRow { variant, outcome, report });
    }
    Ok(rows)
}

/// One line per variant and domain.
pub fn ablation_table(rows: &[AblationRow]) -> String {
    let mut s = String::from("domain\tvariant\tbest_epoch\trecall\tndcg\trecall_pct\tndcg_pct\n");
    for d in Domain::BOTH {
        for row in rows {
            let m = row.report.domain(d);
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{}\t{}\t{:.4}\t{:.4}",
                d.tag(),
                row.variant,
                row.outcome.best_epoch,
                m.recall,
                m.ndcg,
                100.0 * m.recall,
                100.0 * m.ndcg
            );
        }
    }
    s
}
