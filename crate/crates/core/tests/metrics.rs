mod common;

use areil_core::corpus::Domain;
use areil_core::evalkit::{
    evaluate_scorer, evaluate_scorer_sequential, ndcg_at_k, rank_items, recall_at_k, top_k, EvalSplit, Scorer,
};
use areil_core::numcore::seeded_rng;
use common::{brute_force_metrics, one_item_split, RandomScorer};
use rand::seq::index::sample;
use rand::Rng;

fn flags(n: usize, mask: &[usize]) -> Vec<bool> {
    (0..n).map(|i| mask.contains(&i)).collect()
}

#[test]
fn metrics_match_brute_force() {
    let mut rng = seeded_rng(99);
    for case in 0..1000 {
        let n = rng.gen_range(1..60);
        // coarse scores force plenty of ties
        let levels = rng.gen_range(1..8);
        let scores: Vec<f64> = (0..n).map(|_| rng.gen_range(0..levels) as f64 / 4.0).collect();
        let m = rng.gen_range(0..=n / 3);
        let mut mask: Vec<usize> = sample(&mut rng, n, m).into_vec();
        mask.sort_unstable();
        let free: Vec<usize> = (0..n).filter(|i| !mask.contains(i)).collect();
        if free.is_empty() {
            continue;
        }
        let take = rng.gen_range(1..=free.len().min(6));
        let mut relevant: Vec<usize> = sample(&mut rng, free.len(), take).iter().map(|i| free[i]).collect();
        relevant.sort_unstable();
        let k = rng.gen_range(1..25);

        let ranked = top_k(&scores, &flags(n, &mask), k);
        let (r, g) = brute_force_metrics(&scores, &relevant, &mask, k);
        assert_eq!(recall_at_k(&ranked, &relevant, k), r, "case {case}");
        assert!((ndcg_at_k(&ranked, &relevant, k) - g).abs() < 1e-12, "case {case}");
        let full = rank_items(&scores, &mask);
        assert_eq!(&full[..k.min(full.len())], &ranked[..], "case {case}");
    }
}

#[test]
fn hand_computed_values() {
    let ranked = [4, 0, 2];
    assert_eq!(recall_at_k(&ranked, &[0, 9], 3), 0.5);
    // a single hit at position 2 against an ideal hit at position 1
    let g = ndcg_at_k(&ranked, &[0], 3);
    assert!((g - 0.630_929_753_571_457_5).abs() < 1e-15);
    assert_eq!(ndcg_at_k(&ranked, &[4], 3), 1.0);
    assert_eq!(recall_at_k(&ranked, &[], 3), 0.0);
}

#[test]
fn masked_items_never_appear() {
    let scores = [5.0, 4.0, 3.0, 2.0, 1.0];
    for bits in 0u32..32 {
        let mask: Vec<usize> = (0..5).filter(|i| bits >> i & 1 == 1).collect();
        let ranked = rank_items(&scores, &mask);
        let expected: Vec<usize> = (0..5).filter(|i| !mask.contains(i)).collect();
        assert_eq!(ranked, expected);
        assert_eq!(top_k(&scores, &flags(5, &mask), 2), expected.iter().copied().take(2).collect::<Vec<_>>());
    }
}

#[test]
fn random_scores_give_chance_recall() {
    let (users, items, k) = (2000, 1000, 20);
    let data = one_item_split(5, users, items);
    let scorer = RandomScorer { users, items: [items; 2], seed: 77 };
    let report = evaluate_scorer(&scorer, &data, EvalSplit::Test, k).unwrap();
    let p = 0.02;
    let sigma = (p * (1.0 - p) / users as f64).sqrt();
    for d in Domain::BOTH {
        let r = report.domain(d).recall;
        assert!((r - p).abs() < 3.0 * sigma, "{d}: {r}");
        assert_eq!(report.domain(d).evaluated, users);
    }
}

#[test]
fn parallel_and_sequential_agree() {
    let data = one_item_split(8, 300, 120);
    let scorer = RandomScorer { users: 300, items: [120; 2], seed: 3 };
    for split in [EvalSplit::Validation, EvalSplit::Test] {
        let a = evaluate_scorer(&scorer, &data, split, 10).unwrap();
        let b = evaluate_scorer_sequential(&scorer, &data, split, 10).unwrap();
        assert_eq!(a, b);
    }
}

struct Oracle<'a>(&'a areil_core::corpus::SplitDataset);

impl Scorer for Oracle<'_> {
    fn num_users(&self) -> usize {
        self.0.num_users
    }

    fn num_items(&self, d: Domain) -> usize {
        self.0.domain(d).num_items
    }

    fn score_items(&self, d: Domain, user: usize, out: &mut Vec<f64>) {
        let ds = self.0.domain(d);
        out.clear();
        out.resize(ds.num_items, 0.0);
        // training items score highest, so only masking lets test items through
        for it in ds.train.iter().filter(|it| it.user == user) {
            out[it.item] = 2.0;
        }
        for it in ds.test.iter().filter(|it| it.user == user) {
            out[it.item] = 1.0;
        }
    }
}

#[test]
fn oracle_scorer_is_perfect_after_masking() {
    let data = one_item_split(2, 50, 40);
    let report = evaluate_scorer(&Oracle(&data), &data, EvalSplit::Test, 1).unwrap();
    for d in Domain::BOTH {
        assert_eq!(report.domain(d).recall, 1.0);
        assert_eq!(report.domain(d).ndcg, 1.0);
    }
}

#[test]
fn bad_inputs_are_rejected() {
    let data = one_item_split(2, 10, 5);
    let scorer = RandomScorer { users: 10, items: [5; 2], seed: 0 };
    assert!(evaluate_scorer(&scorer, &data, EvalSplit::Test, 0).is_err());
    let wrong = RandomScorer { users: 9, items: [5; 2], seed: 0 };
    assert!(evaluate_scorer(&wrong, &data, EvalSplit::Test, 3).is_err());
}
