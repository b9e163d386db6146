use rayon::prelude::*;

use crate::corpus::{Domain, Interaction, SplitDataset};
use crate::error::{Error, Result};
use crate::evalkit::metrics::{mask_flags, ndcg_at_k, rank_items, recall_at_k, top_k};
use crate::evalkit::report::{DomainMetrics, EvalReport, EvalSplit, RunMeta};
use crate::model::{Embeddings, ModelState};
use crate::numcore::dot;
use crate::trainer::TrainingData;

/// Anything that can score a user against a whole item catalog.
pub trait Scorer: Sync {
    fn num_users(&self) -> usize;
    fn num_items(&self, d: Domain) -> usize;
    /// Writes the score of every item of `d` into `out`.
    fn score_items(&self, d: Domain, user: usize, out: &mut Vec<f64>);
}

/// Scores from precomputed final embeddings: `user_final · item_out`.
#[derive(Debug, Clone)]
pub struct ModelScorer {
    emb: Embeddings,
}

impl ModelScorer {
    pub fn new(emb: Embeddings) -> Self {
        Self { emb }
    }

    pub fn from_model(model: &ModelState, data: &TrainingData) -> Result<Self> {
        Ok(Self::new(model.embeddings(data.graph_refs())?))
    }

    pub fn embeddings(&self) -> &Embeddings {
        &self.emb
    }

    /// Unmasked items of `d` for `user`, best first.
    pub fn rank(&self, d: Domain, user: usize, mask: &[usize]) -> Result<Vec<usize>> {
        if user >= self.num_users() {
            return Err(Error::Lookup(format!("user {user} out of range ({} users)", self.num_users())));
        }
        let mut scores = Vec::new();
        self.score_items(d, user, &mut scores);
        Ok(rank_items(&scores, mask))
    }
}

impl Scorer for ModelScorer {
    fn num_users(&self) -> usize {
        self.emb.domain(Domain::X).user_final.rows()
    }

    fn num_items(&self, d: Domain) -> usize {
        self.emb.domain(d).item_out.rows()
    }

    fn score_items(&self, d: Domain, user: usize, out: &mut Vec<f64>) {
        let e = self.emb.domain(d);
        let u = e.user_final.row(user);
        out.clear();
        out.extend(e.item_out.iter_rows().map(|item| dot(u, item)));
    }
}

fn by_user(parts: &[&[Interaction]], num_users: usize) -> Vec<Vec<usize>> {
    let mut lists = vec![Vec::new(); num_users];
    for part in parts {
        for it in part.iter() {
            lists[it.user].push(it.item);
        }
    }
    for l in &mut lists {
        l.sort_unstable();
        l.dedup();
    }
    lists
}

/// Full-ranking Recall@K and NDCG@K of the model on a split.
pub fn evaluate(model: &ModelState, data: &TrainingData, split: EvalSplit, k: usize) -> Result<EvalReport> {
    let scorer = ModelScorer::from_model(model, data)?;
    let report = evaluate_scorer(&scorer, &data.split, split, k)?;
    Ok(report.with_meta(RunMeta { seed: data.split.seed, variant: model.config.variant, ..Default::default() }))
}

/// Users are scored in parallel; the means are reduced in user order.
pub fn evaluate_scorer<S: Scorer>(scorer: &S, data: &SplitDataset, split: EvalSplit, k: usize) -> Result<EvalReport> {
    evaluate_impl(scorer, data, split, k, true)
}

/// Same as `evaluate_scorer` on the calling thread only.
pub fn evaluate_scorer_sequential<S: Scorer>(
    scorer: &S,
    data: &SplitDataset,
    split: EvalSplit,
    k: usize,
) -> Result<EvalReport> {
    evaluate_impl(scorer, data, split, k, false)
}

fn evaluate_impl<S: Scorer>(
    scorer: &S,
    data: &SplitDataset,
    split: EvalSplit,
    k: usize,
    parallel: bool,
) -> Result<EvalReport> {
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    if scorer.num_users() != data.num_users {
        return Err(Error::Evaluation(format!(
            "scorer has {} users, split has {}",
            scorer.num_users(),
            data.num_users
        )));
    }
    let mut domains = [DomainMetrics::default(); 2];
    for d in Domain::BOTH {
        let ds = data.domain(d);
        if scorer.num_items(d) != ds.num_items {
            return Err(Error::Evaluation(format!(
                "domain {d}: scorer has {} items, split has {}",
                scorer.num_items(d),
                ds.num_items
            )));
        }
        let (target, masked): (&[Interaction], Vec<&[Interaction]>) = match split {
            EvalSplit::Validation => (&ds.validation, vec![&ds.train]),
            EvalSplit::Test => (&ds.test, vec![&ds.train, &ds.validation]),
        };
        if target.is_empty() {
            return Err(Error::Evaluation(format!("domain {d} has an empty {split} split")));
        }
        let relevant = by_user(&[target], data.num_users);
        let mask = by_user(&masked, data.num_users);
        let users: Vec<usize> = (0..data.num_users).filter(|&u| !relevant[u].is_empty()).collect();
        let per_user = |&u: &usize| {
            let mut scores = Vec::with_capacity(ds.num_items);
            scorer.score_items(d, u, &mut scores);
            let ranked = top_k(&scores, &mask_flags(ds.num_items, &mask[u]), k);
            (recall_at_k(&ranked, &relevant[u], k), ndcg_at_k(&ranked, &relevant[u], k))
        };
        let values: Vec<(f64, f64)> =
            if parallel { users.par_iter().map(per_user).collect() } else { users.iter().map(per_user).collect() };
        let n = values.len() as f64;
        let (r, g) = values.iter().fold((0.0, 0.0), |(r, g), (a, b)| (r + a, g + b));
        domains[d.index()] =
            DomainMetrics { recall: r / n, ndcg: g / n, evaluated: users.len(), skipped: data.num_users - users.len() };
    }
    Ok(EvalReport { split, k, masked_items_policy: split.mask_policy().to_string(), domains, meta: RunMeta::default() })
}
