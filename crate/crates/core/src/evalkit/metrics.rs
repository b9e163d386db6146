use std::cmp::Ordering;

// Descending score, ascending index on ties.
fn rank_order(scores: &[f64], a: usize, b: usize) -> Ordering {
    scores[b].total_cmp(&scores[a]).then(a.cmp(&b))
}

/// Every unmasked item, best first. Ties go to the lower item index.
pub fn rank_items(scores: &[f64], mask: &[usize]) -> Vec<usize> {
    let masked = mask_flags(scores.len(), mask);
    let mut order: Vec<usize> = (0..scores.len()).filter(|&i| !masked[i]).collect();
    order.sort_unstable_by(|&a, &b| rank_order(scores, a, b));
    order
}

/// The first `k` entries of `rank_items`, without sorting the whole catalog.
pub fn top_k(scores: &[f64], masked: &[bool], k: usize) -> Vec<usize> {
    let mut cand: Vec<usize> = (0..scores.len()).filter(|&i| !masked[i]).collect();
    if k == 0 {
        return Vec::new();
    }
    if cand.len() > k {
        cand.select_nth_unstable_by(k - 1, |&a, &b| rank_order(scores, a, b));
        cand.truncate(k);
    }
    cand.sort_unstable_by(|&a, &b| rank_order(scores, a, b));
    cand
}

pub(crate) fn mask_flags(n: usize, mask: &[usize]) -> Vec<bool> {
    let mut flags = vec![false; n];
    for &i in mask {
        if i < n {
            flags[i] = true;
        }
    }
    flags
}

/// `|top-K ∩ relevant| / |relevant|`. `relevant` must be sorted.
pub fn recall_at_k(ranked: &[usize], relevant: &[usize], k: usize) -> f64 {
    if relevant.is_empty() {
        return 0.0;
    }
    let hits = ranked.iter().take(k).filter(|i| relevant.binary_search(i).is_ok()).count();
    hits as f64 / relevant.len() as f64
}

/// Binary-relevance NDCG with `1/log2(p+1)` discounts, positions from 1.
/// `relevant` must be sorted.
pub fn ndcg_at_k(ranked: &[usize], relevant: &[usize], k: usize) -> f64 {
    if relevant.is_empty() {
        return 0.0;
    }
    let dcg: f64 = ranked
        .iter()
        .take(k)
        .enumerate()
        .filter(|(_, i)| relevant.binary_search(i).is_ok())
        .map(|(p, _)| 1.0 / ((p + 2) as f64).log2())
        .sum();
    let idcg: f64 = (0..k.min(relevant.len())).map(|p| 1.0 / ((p + 2) as f64).log2()).sum();
    dcg / idcg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranking_examples() {
        let s = [0.9, 0.1, 0.5];
        assert_eq!(rank_items(&s, &[]), vec![0, 2, 1]);
        assert_eq!(rank_items(&s, &[0]), vec![2, 1]);
        assert_eq!(rank_items(&[0.3; 4], &[]), vec![0, 1, 2, 3]);
    }

    #[test]
    fn top_k_agrees_with_full_sort() {
        let s = [0.2, 0.7, 0.7, -1.0, 0.9, 0.0, 0.7];
        let masked = mask_flags(s.len(), &[4]);
        let full = rank_items(&s, &[4]);
        for k in 0..=s.len() + 1 {
            assert_eq!(top_k(&s, &masked, k), full.iter().copied().take(k).collect::<Vec<_>>());
        }
    }

    #[test]
    fn metric_examples() {
        let ranked: Vec<usize> = (0..30).collect();
        assert_eq!(recall_at_k(&ranked, &[3, 25], 20), 0.5);
        assert_eq!(recall_at_k(&ranked, &[3, 5], 20), 1.0);
        assert_eq!(ndcg_at_k(&ranked, &[0], 20), 1.0);
        assert!((ndcg_at_k(&ranked, &[1], 20) - 0.630_929_753_571_457_4).abs() < 1e-15);
        assert_eq!(ndcg_at_k(&ranked, &[25], 20), 0.0);
    }
}
