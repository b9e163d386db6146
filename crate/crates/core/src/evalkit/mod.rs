//! Full-ranking evaluation, ablation runs, the disentanglement probe, and
//! embedding export.

mod ablation;
mod evaluate;
mod export;
mod metrics;
mod probe;
mod report;

pub use ablation::{ablation_table, run_ablation, AblationRow};
pub use evaluate::{evaluate, evaluate_scorer, evaluate_scorer_sequential, ModelScorer, Scorer};
pub use export::{export_embeddings, ITEM_EMBEDDINGS_FILE, USER_EMBEDDINGS_FILE};
pub use metrics::{ndcg_at_k, rank_items, recall_at_k, top_k};
pub use probe::{disentanglement_probe, probe_accuracy, ProbeConfig, ProbeResult};
pub use report::{DomainMetrics, EvalReport, EvalSplit, RunMeta};
