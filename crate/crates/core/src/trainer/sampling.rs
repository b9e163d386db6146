use rand::Rng;

use crate::corpus::{Domain, Interaction, SplitDataset};
use crate::error::{Error, Result};
use crate::trainer::Sample;

/// Uniform negative sampler with rejection of training positives.
#[derive(Debug, Clone)]
pub struct NegativeSampler {
    num_items: usize,
    /// Sorted training items of each user.
    positives: Vec<Vec<usize>>,
}

impl NegativeSampler {
    pub fn new(train: &[Interaction], num_users: usize, num_items: usize) -> Self {
        let mut positives = vec![Vec::new(); num_users];
        for it in train {
            positives[it.user].push(it.item);
        }
        for p in &mut positives {
            p.sort_unstable();
            p.dedup();
        }
        Self { num_items, positives }
    }

    pub fn for_domain(split: &SplitDataset, d: Domain) -> Self {
        let ds = split.domain(d);
        Self::new(&ds.train, split.num_users, ds.num_items)
    }

    pub fn is_positive(&self, user: usize, item: usize) -> bool {
        self.positives[user].binary_search(&item).is_ok()
    }

    /// `n` label-0 samples per positive, each drawn uniformly from the items
    /// the user has not interacted with in training.
    pub fn sample<R: Rng + ?Sized>(&self, positives: &[Interaction], n: usize, rng: &mut R) -> Result<Vec<Sample>> {
        let mut out = Vec::with_capacity(positives.len() * n);
        for it in positives {
            if self.positives[it.user].len() >= self.num_items {
                return Err(Error::Sampling { user: it.user, num_items: self.num_items });
            }
            for _ in 0..n {
                let item = loop {
                    let cand = rng.gen_range(0..self.num_items);
                    if !self.is_positive(it.user, cand) {
                        break cand;
                    }
                };
                out.push(Sample { user: it.user, item, label: 0.0 });
            }
        }
        Ok(out)
    }
}

/// Negatives for `positives` of domain `d`, rejecting that domain's training pairs.
pub fn sample_negatives<R: Rng + ?Sized>(
    split: &SplitDataset,
    d: Domain,
    positives: &[Interaction],
    n: usize,
    rng: &mut R,
) -> Result<Vec<Sample>> {
    NegativeSampler::for_domain(split, d).sample(positives, n, rng)
}
