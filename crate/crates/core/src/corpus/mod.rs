//! Raw rating logs to aligned, split, graph-ready cross-domain data.

mod graph;
mod ingest;
mod manifest;
mod split;

use std::collections::HashMap;
use std::fmt;

pub use graph::{build_graph, DomainGraph};
pub use ingest::{ingest_interactions, parse_interactions, IngestOptions, RawInteraction};
pub use manifest::{read_prepared, write_prepared, PreparedData};
pub use split::{split_holdout, DomainSplit, SplitDataset};

use crate::error::{Error, Result};

/// One of the two domains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Domain {
    X,
    Y,
}

impl Domain {
    pub const BOTH: [Domain; 2] = [Domain::X, Domain::Y];

    pub fn index(self) -> usize {
        match self {
            Domain::X => 0,
            Domain::Y => 1,
        }
    }

    pub fn other(self) -> Domain {
        match self {
            Domain::X => Domain::Y,
            Domain::Y => Domain::X,
        }
    }

    /// Lowercase tag used in file names and exports.
    pub fn tag(self) -> &'static str {
        match self {
            Domain::X => "x",
            Domain::Y => "y",
        }
    }

    /// Domain-classifier target: 0 for X, 1 for Y.
    pub fn label(self) -> f64 {
        match self {
            Domain::X => 0.0,
            Domain::Y => 1.0,
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Domain::X => "X",
            Domain::Y => "Y",
        })
    }
}

/// A binary (user, item) interaction in dense index space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Interaction {
    pub user: usize,
    pub item: usize,
}

impl Interaction {
    pub fn new(user: usize, item: usize) -> Self {
        Self { user, item }
    }
}

/// Bijection between opaque tokens and contiguous indices, in sorted token order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IdMap {
    token_to_index: HashMap<String, usize>,
    index_to_token: Vec<String>,
}

impl IdMap {
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut sorted: Vec<String> = tokens.into_iter().map(Into::into).collect();
        sorted.sort_unstable();
        sorted.dedup();
        Self::from_ordered(sorted)
    }

    /// Keeps the given order; tokens must be unique.
    pub(crate) fn from_ordered(index_to_token: Vec<String>) -> Self {
        let token_to_index = index_to_token.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Self { token_to_index, index_to_token }
    }

    pub fn len(&self) -> usize {
        self.index_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index_to_token.is_empty()
    }

    pub fn index(&self, token: &str) -> Option<usize> {
        self.token_to_index.get(token).copied()
    }

    pub fn token(&self, index: usize) -> Option<&str> {
        self.index_to_token.get(index).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.index_to_token
    }
}

/// Binarized interactions of one domain.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainDataset {
    pub users: IdMap,
    pub items: IdMap,
    /// Sorted by (user, item), no duplicates.
    pub interactions: Vec<Interaction>,
    /// Raw positive records collapsed into each interaction (parallel to `interactions`).
    pub multiplicity: Vec<u32>,
}

impl DomainDataset {
    /// Builds a dataset from token pairs, collapsing duplicates and indexing deterministically.
    pub fn from_token_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        Self::from_weighted_pairs(pairs.into_iter().map(|(u, i)| (u, i, 1)))
    }

    fn from_weighted_pairs<'a>(pairs: impl Iterator<Item = (&'a str, &'a str, u32)>) -> Self {
        let pairs: Vec<(&str, &str, u32)> = pairs.collect();
        let users = IdMap::from_tokens(pairs.iter().map(|p| p.0));
        let items = IdMap::from_tokens(pairs.iter().map(|p| p.1));
        let mut indexed: Vec<(Interaction, u32)> = pairs
            .iter()
            .map(|&(u, i, m)| (Interaction::new(users.index(u).unwrap(), items.index(i).unwrap()), m))
            .collect();
        indexed.sort_unstable_by_key(|p| p.0);
        let mut interactions: Vec<Interaction> = Vec::with_capacity(indexed.len());
        let mut multiplicity: Vec<u32> = Vec::with_capacity(indexed.len());
        for (it, m) in indexed {
            if interactions.last() == Some(&it) {
                *multiplicity.last_mut().unwrap() += m;
            } else {
                interactions.push(it);
                multiplicity.push(m);
            }
        }
        Self { users, items, interactions, multiplicity }
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_items(&self) -> usize {
        self.items.len()
    }

    /// Positive records before duplicate collapse.
    pub fn raw_records(&self) -> usize {
        self.multiplicity.iter().map(|&m| m as usize).sum()
    }

    fn weighted_token_pairs(&self) -> impl Iterator<Item = (&str, &str, u32)> + '_ {
        self.interactions
            .iter()
            .zip(&self.multiplicity)
            .map(|(it, &m)| (self.users.token(it.user).unwrap(), self.items.token(it.item).unwrap(), m))
    }
}

/// Two domains over one fully shared user set.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossDomainDataset {
    pub shared_users: IdMap,
    pub domain_x: DomainDataset,
    pub domain_y: DomainDataset,
}

impl CrossDomainDataset {
    pub fn domain(&self, d: Domain) -> &DomainDataset {
        match d {
            Domain::X => &self.domain_x,
            Domain::Y => &self.domain_y,
        }
    }

    pub fn num_users(&self) -> usize {
        self.shared_users.len()
    }

    pub fn stats(&self) -> [DomainStats; 2] {
        Domain::BOTH.map(|d| DomainStats::of(self.domain(d)))
    }
}

/// Dataset statistics in the layout of a per-domain summary table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainStats {
    pub users: usize,
    pub items: usize,
    pub interactions: usize,
    pub raw_interactions: usize,
    pub density: f64,
}

impl DomainStats {
    pub fn of(ds: &DomainDataset) -> Self {
        let cells = (ds.num_users() * ds.num_items()).max(1) as f64;
        Self {
            users: ds.num_users(),
            items: ds.num_items(),
            interactions: ds.interactions.len(),
            raw_interactions: ds.raw_records(),
            density: ds.interactions.len() as f64 / cells,
        }
    }
}

/// Keeps only users present in both domains and the items they touched.
pub fn align_overlapping_users(ds_x: &DomainDataset, ds_y: &DomainDataset) -> Result<CrossDomainDataset> {
    if ds_x.interactions.is_empty() {
        return Err(Error::EmptyDataset("X".into()));
    }
    if ds_y.interactions.is_empty() {
        return Err(Error::EmptyDataset("Y".into()));
    }
    let shared: Vec<&str> =
        ds_x.users.tokens().iter().filter(|t| ds_y.users.index(t).is_some()).map(String::as_str).collect();
    if shared.is_empty() {
        return Err(Error::Alignment { users_x: ds_x.num_users(), users_y: ds_y.num_users() });
    }
    let shared_users = IdMap::from_tokens(shared.iter().copied());

    // Every shared user keeps at least one interaction, so the rebuilt user map
    // equals `shared_users` and items left without interactions vanish.
    let restrict = |ds: &DomainDataset| {
        DomainDataset::from_weighted_pairs(
            ds.weighted_token_pairs().filter(|(u, _, _)| shared_users.index(u).is_some()),
        )
    };
    let domain_x = restrict(ds_x);
    let domain_y = restrict(ds_y);
    debug_assert_eq!(domain_x.users, shared_users);
    debug_assert_eq!(domain_y.users, shared_users);
    Ok(CrossDomainDataset { shared_users, domain_x, domain_y })
}
