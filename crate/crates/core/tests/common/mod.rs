#![allow(dead_code)]

use std::collections::BTreeSet;

use areil_core::corpus::{Domain, DomainSplit, Interaction, SplitDataset};
use areil_core::model::{ModelConfig, ModelState};
use areil_core::numcore::{seeded_rng, DenseMatrix, EngineRng};
use areil_core::trainer::{Sample, TrainBatch, TrainingData};
use rand::Rng;

/// Random training interactions where every user has at least one item.
pub fn random_interactions(rng: &mut EngineRng, users: usize, items: usize, density: f64) -> Vec<Interaction> {
    let mut set = BTreeSet::new();
    for u in 0..users {
        set.insert(Interaction::new(u, rng.gen_range(0..items)));
        for i in 0..items {
            if rng.gen_bool(density) {
                set.insert(Interaction::new(u, i));
            }
        }
    }
    set.into_iter().collect()
}

fn domain_split(rng: &mut EngineRng, users: usize, items: usize, density: f64) -> DomainSplit {
    let all = random_interactions(rng, users, items, density);
    let (mut train, mut validation, mut test) = (Vec::new(), Vec::new(), Vec::new());
    let mut seen = vec![false; users];
    for it in all {
        if !seen[it.user] {
            seen[it.user] = true;
            train.push(it);
            continue;
        }
        match rng.gen_range(0..10) {
            0 => validation.push(it),
            1 => test.push(it),
            _ => train.push(it),
        }
    }
    DomainSplit { num_items: items, train, validation, test, reassigned: 0 }
}

/// A small random split with non-empty validation and test parts.
pub fn small_data(seed: u64, users: usize, items_x: usize, items_y: usize) -> TrainingData {
    let mut rng = seeded_rng(seed);
    loop {
        let x = domain_split(&mut rng, users, items_x, 0.35);
        let y = domain_split(&mut rng, users, items_y, 0.35);
        if [&x, &y].iter().all(|d| !d.validation.is_empty() && !d.test.is_empty()) {
            return TrainingData::new(SplitDataset { seed, num_users: users, x, y }).unwrap();
        }
    }
}

/// Training positives of both domains plus one uniform negative each.
pub fn full_batch(data: &TrainingData, rng: &mut EngineRng) -> TrainBatch {
    let mut batch = TrainBatch::default();
    for d in Domain::BOTH {
        let ds = data.split.domain(d);
        let rows = batch.domain_mut(d);
        for it in &ds.train {
            rows.push(Sample { user: it.user, item: it.item, label: 1.0 });
            rows.push(Sample { user: it.user, item: rng.gen_range(0..ds.num_items), label: 0.0 });
        }
    }
    batch
}

/// The instance size used for gradient checks.
pub fn grad_instance(seed: u64) -> (ModelConfig, ModelState, TrainingData, TrainBatch) {
    let cfg = ModelConfig {
        embed_dim: 8,
        gcn_layers: 2,
        gamma_s: 0.9,
        gamma_t: 0.9,
        lambda1: 0.1,
        lambda2: 0.01,
        ..Default::default()
    };
    let data = small_data(seed, 8, 12, 10);
    let mut rng = seeded_rng(seed.wrapping_mul(31).wrapping_add(7));
    let model = ModelState::new(&cfg, data.dims(), &mut rng).unwrap();
    let batch = full_batch(&data, &mut rng);
    (cfg, model, data, batch)
}

/// Dense oracle for a row-wise linear map.
pub fn max_abs(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    a.max_abs_diff(b).unwrap()
}

/// Recall and NDCG by counting, for each relevant item, how many unmasked
/// items beat it. No sorting involved.
pub fn brute_force_metrics(scores: &[f64], relevant: &[usize], mask: &[usize], k: usize) -> (f64, f64) {
    if relevant.is_empty() {
        return (0.0, 0.0);
    }
    let mut hits = 0usize;
    let mut dcg = 0.0;
    for &r in relevant {
        if mask.contains(&r) {
            continue;
        }
        let ahead = (0..scores.len())
            .filter(|j| !mask.contains(j))
            .filter(|&j| scores[j] > scores[r] || (scores[j] == scores[r] && j < r))
            .count();
        if ahead < k {
            hits += 1;
            dcg += 1.0 / ((ahead + 2) as f64).log2();
        }
    }
    let ideal: f64 = (0..k.min(relevant.len())).map(|p| 1.0 / ((p + 2) as f64).log2()).sum();
    (hits as f64 / relevant.len() as f64, dcg / ideal)
}

/// Scores drawn uniformly per user and domain, independent of any model.
pub struct RandomScorer {
    pub users: usize,
    pub items: [usize; 2],
    pub seed: u64,
}

impl areil_core::evalkit::Scorer for RandomScorer {
    fn num_users(&self) -> usize {
        self.users
    }

    fn num_items(&self, d: Domain) -> usize {
        self.items[d.index()]
    }

    fn score_items(&self, d: Domain, user: usize, out: &mut Vec<f64>) {
        let mut rng =
            seeded_rng(self.seed ^ ((user as u64) << 1 | d.index() as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        out.clear();
        out.extend((0..self.items[d.index()]).map(|_| rng.gen::<f64>()));
    }
}

/// Every user gets one training, one validation, and one test item per
/// domain, distinct and drawn uniformly.
pub fn one_item_split(seed: u64, users: usize, items: usize) -> SplitDataset {
    let mut rng = seeded_rng(seed);
    let mut part = || {
        let mut s = DomainSplit {
            num_items: items,
            train: Vec::new(),
            validation: Vec::new(),
            test: Vec::new(),
            reassigned: 0,
        };
        for u in 0..users {
            let picks = rand::seq::index::sample(&mut rng, items, 3);
            s.train.push(Interaction::new(u, picks.index(0)));
            s.validation.push(Interaction::new(u, picks.index(1)));
            s.test.push(Interaction::new(u, picks.index(2)));
        }
        s
    };
    let x = part();
    let y = part();
    SplitDataset { seed, num_users: users, x, y }
}

/// Brute-force normalized adjacency straight from the degree formula.
pub fn oracle_adjacency(users: usize, items: usize, edges: &[(usize, usize)]) -> DenseMatrix {
    let mut set: Vec<(usize, usize)> = edges.to_vec();
    set.sort_unstable();
    set.dedup();
    let n = users + items;
    let mut deg = vec![0usize; n];
    for &(u, i) in &set {
        deg[u] += 1;
        deg[users + i] += 1;
    }
    let mut a = DenseMatrix::zeros(n, n);
    for &(u, i) in &set {
        let c = 1.0 / ((deg[u] * deg[users + i]) as f64).sqrt();
        a.set(u, users + i, c);
        a.set(users + i, u, c);
    }
    a
}
