use crate::corpus::Interaction;
use crate::error::{Error, Result};

/// Symmetrically normalized user–item bipartite graph in CSR form.
///
/// Node `u` in `0..num_users` is a user, node `num_users + i` is item `i`.
/// Each stored edge carries `1 / sqrt(deg(a) * deg(b))`.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainGraph {
    num_users: usize,
    num_items: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    coef: Vec<f64>,
}

impl DomainGraph {
    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_items(&self) -> usize {
        self.num_items
    }

    pub fn num_nodes(&self) -> usize {
        self.num_users + self.num_items
    }

    /// Stored (directed) edge count; twice the number of interactions.
    pub fn num_edges(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coef
    }

    pub fn degree(&self, node: usize) -> usize {
        self.row_ptr[node + 1] - self.row_ptr[node]
    }

    /// `(neighbor, coefficient)` pairs of a node, neighbors ascending.
    pub fn neighbors(&self, node: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[node]..self.row_ptr[node + 1];
        self.col_idx[span.clone()].iter().copied().zip(self.coef[span].iter().copied())
    }

    /// Coefficient of edge `(a, b)`, if present.
    pub fn coefficient(&self, a: usize, b: usize) -> Option<f64> {
        let span = self.row_ptr[a]..self.row_ptr[a + 1];
        let cols = &self.col_idx[span.clone()];
        cols.binary_search(&b).ok().map(|k| self.coef[span.start + k])
    }
}

/// Builds the normalized training graph of one domain.
pub fn build_graph(train: &[Interaction], num_users: usize, num_items: usize) -> Result<DomainGraph> {
    for it in train {
        if it.user >= num_users || it.item >= num_items {
            return Err(Error::GraphIndex { user: it.user, item: it.item, num_users, num_items });
        }
    }
    let mut edges: Vec<Interaction> = train.to_vec();
    edges.sort_unstable();
    edges.dedup();

    let n = num_users + num_items;
    let mut degree = vec![0usize; n];
    for e in &edges {
        degree[e.user] += 1;
        degree[num_users + e.item] += 1;
    }

    let mut row_ptr = vec![0usize; n + 1];
    for node in 0..n {
        row_ptr[node + 1] = row_ptr[node] + degree[node];
    }
    let mut fill = row_ptr[..n].to_vec();
    let mut col_idx = vec![0usize; row_ptr[n]];
    // Edges are sorted by (user, item), so user rows fill with ascending items and
    // item rows fill with ascending users.
    for e in &edges {
        let (u, i) = (e.user, num_users + e.item);
        col_idx[fill[u]] = i;
        fill[u] += 1;
        col_idx[fill[i]] = u;
        fill[i] += 1;
    }
    let mut coef = vec![0.0; col_idx.len()];
    for node in 0..n {
        for k in row_ptr[node]..row_ptr[node + 1] {
            let other = col_idx[k];
            coef[k] = 1.0 / ((degree[node] * degree[other]) as f64).sqrt();
        }
    }
    Ok(DomainGraph { num_users, num_items, row_ptr, col_idx, coef })
}
