//! Planted-factor cross-domain data for end-to-end checks.
//!
//! Every user has a shared taste vector used in both domains and one specific
//! vector per domain; every item has a matching pair of factor blocks. A user
//! picks items without replacement with probability proportional to
//! `exp(sharpness · affinity)`, through Gumbel top-n selection.

use rand::Rng;
use rand_distr::{Distribution, Gumbel, StandardNormal};

use crate::corpus::{align_overlapping_users, CrossDomainDataset, Domain, DomainDataset};
use crate::error::{Error, Result};
use crate::numcore::{dot, seeded_rng, EngineRng};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub num_users: usize,
    /// Items per domain.
    pub num_items: usize,
    pub shared_factors: usize,
    pub specific_factors: usize,
    /// Mean interactions per user in domain X.
    pub dense_mean: f64,
    /// Density of domain Y relative to domain X.
    pub sparse_ratio: f64,
    pub sharpness: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            num_users: 2000,
            num_items: 500,
            shared_factors: 16,
            specific_factors: 16,
            dense_mean: 20.0,
            sparse_ratio: 0.25,
            sharpness: 2.5,
            seed: 1,
        }
    }
}

fn normal_vec(n: usize, rng: &mut EngineRng) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

// Per-user count uniform in [mean/2, 3·mean/2], at least 1.
fn count(mean: f64, rng: &mut EngineRng) -> usize {
    let lo = (mean / 2.0).floor().max(1.0) as usize;
    let hi = (1.5 * mean).ceil().max(lo as f64) as usize;
    rng.gen_range(lo..=hi)
}

/// Token pairs per domain; users are `u00000`, items `x0000` / `y0000`.
pub fn generate_pairs(cfg: &SyntheticConfig) -> Result<[Vec<(String, String)>; 2]> {
    if cfg.num_users == 0 || cfg.num_items < 2 || !(cfg.sparse_ratio > 0.0) || !(cfg.dense_mean >= 1.0) {
        return Err(Error::Config("synthetic: empty or degenerate configuration".into()));
    }
    let mut rng = seeded_rng(cfg.seed);
    let (fs, fp) = (cfg.shared_factors, cfg.specific_factors);
    let scale = 1.0 / ((fs + fp) as f64).sqrt();
    let items: Vec<Vec<(Vec<f64>, Vec<f64>)>> = (0..2)
        .map(|_| (0..cfg.num_items).map(|_| (normal_vec(fs, &mut rng), normal_vec(fp, &mut rng))).collect())
        .collect();
    let gumbel = Gumbel::new(0.0, 1.0).expect("valid scale");
    let mut pairs: [Vec<(String, String)>; 2] = [Vec::new(), Vec::new()];
    for u in 0..cfg.num_users {
        let shared = normal_vec(fs, &mut rng);
        for d in Domain::BOTH {
            let specific = normal_vec(fp, &mut rng);
            let mean = match d {
                Domain::X => cfg.dense_mean,
                Domain::Y => cfg.dense_mean * cfg.sparse_ratio,
            };
            let n = count(mean, &mut rng).min(cfg.num_items - 1);
            let mut keyed: Vec<(f64, usize)> = items[d.index()]
                .iter()
                .enumerate()
                .map(|(i, (qs, qp))| {
                    let affinity = scale * (dot(&shared, qs) + dot(&specific, qp));
                    (cfg.sharpness * affinity + gumbel.sample(&mut rng), i)
                })
                .collect();
            keyed.sort_unstable_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            for &(_, i) in &keyed[..n] {
                pairs[d.index()].push((format!("u{u:05}"), format!("{}{i:04}", d.tag())));
            }
        }
    }
    Ok(pairs)
}

pub fn generate(cfg: &SyntheticConfig) -> Result<CrossDomainDataset> {
    let [px, py] = generate_pairs(cfg)?;
    let ds = |p: &[(String, String)]| DomainDataset::from_token_pairs(p.iter().map(|(u, i)| (u.as_str(), i.as_str())));
    align_overlapping_users(&ds(&px), &ds(&py))
}
