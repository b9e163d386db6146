use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{CrossDomainDataset, Domain, DomainDataset, Interaction};
use crate::error::{Error, Result};

const MIN_INTERACTIONS: usize = 10;

/// Train/validation/test partition of one domain, each part sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomainSplit {
    pub num_items: usize,
    pub train: Vec<Interaction>,
    pub validation: Vec<Interaction>,
    pub test: Vec<Interaction>,
    /// Interactions promoted into train so that no user is trainless.
    pub reassigned: usize,
}

impl DomainSplit {
    pub fn len(&self) -> usize {
        self.train.len() + self.validation.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitDataset {
    pub seed: u64,
    pub num_users: usize,
    pub x: DomainSplit,
    pub y: DomainSplit,
}

impl SplitDataset {
    pub fn domain(&self, d: Domain) -> &DomainSplit {
        match d {
            Domain::X => &self.x,
            Domain::Y => &self.y,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Part {
    Train,
    Validation,
    Test,
}

/// Seeded 80/10/10 random split of each domain.
pub fn split_holdout(cds: &CrossDomainDataset, seed: u64) -> Result<SplitDataset> {
    let num_users = cds.num_users();
    let x = split_domain(&cds.domain_x, num_users, domain_rng(seed, Domain::X), Domain::X)?;
    let y = split_domain(&cds.domain_y, num_users, domain_rng(seed, Domain::Y), Domain::Y)?;
    Ok(SplitDataset { seed, num_users, x, y })
}

fn domain_rng(seed: u64, d: Domain) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(d.index() as u64 + 1)))
}

fn split_domain(ds: &DomainDataset, num_users: usize, mut rng: ChaCha8Rng, domain: Domain) -> Result<DomainSplit> {
    let n = ds.interactions.len();
    if n < MIN_INTERACTIONS {
        return Err(Error::Config(format!(
            "domain {domain} has {n} interactions; splitting needs at least {MIN_INTERACTIONS}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let n_train = n * 8 / 10;
    let n_val = n / 10;

    let mut part = vec![Part::Test; n];
    for &k in &order[..n_train] {
        part[k] = Part::Train;
    }
    for &k in &order[n_train..n_train + n_val] {
        part[k] = Part::Validation;
    }

    let mut train_count = vec![0usize; num_users];
    for (k, it) in ds.interactions.iter().enumerate() {
        if part[k] == Part::Train {
            train_count[it.user] += 1;
        }
    }

    // Promote the lowest-item held-out interaction of every trainless user and,
    // when possible, demote a train interaction of a user with spare training data
    // into the vacated part so part sizes stay at their nominal values.
    let mut reassigned = 0;
    let mut demote_cursor = 0;
    // Interactions are sorted by (user, item), so the first held-out one per user
    // has the lowest item index.
    let mut k = 0;
    while k < n {
        let user = ds.interactions[k].user;
        let end = k + ds.interactions[k..].iter().take_while(|it| it.user == user).count();
        if train_count[user] == 0 {
            let promote = k;
            let vacated = part[promote];
            part[promote] = Part::Train;
            train_count[user] = 1;
            reassigned += 1;
            while demote_cursor < n_train {
                let cand = order[demote_cursor];
                demote_cursor += 1;
                let cu = ds.interactions[cand].user;
                if part[cand] == Part::Train && train_count[cu] >= 2 {
                    part[cand] = vacated;
                    train_count[cu] -= 1;
                    break;
                }
            }
            log::debug!(
                "domain {domain}: user {user} had no training interaction; promoted item {}",
                ds.interactions[promote].item
            );
        }
        k = end;
    }
    if reassigned > 0 {
        log::info!("domain {domain}: {reassigned} interactions promoted to train");
    }

    let mut out = DomainSplit {
        num_items: ds.num_items(),
        train: Vec::with_capacity(n_train),
        validation: Vec::with_capacity(n_val),
        test: Vec::with_capacity(n - n_train - n_val),
        reassigned,
    };
    for (k, it) in ds.interactions.iter().enumerate() {
        match part[k] {
            Part::Train => out.train.push(*it),
            Part::Validation => out.validation.push(*it),
            Part::Test => out.test.push(*it),
        }
    }
    Ok(out)
}
