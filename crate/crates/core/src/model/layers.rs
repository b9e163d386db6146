//! Forward and backward passes of the embedding-side layers.

use crate::corpus::DomainGraph;
use crate::error::{Error, Result};
use crate::numcore::{dot, spmm, DenseMatrix};

/// Propagates `layers` times over the normalized graph and concatenates
/// layer 0 … layer K along the feature axis.
pub fn propagate_and_concat(
    graph: &DomainGraph,
    user_emb: &DenseMatrix,
    item_emb: &DenseMatrix,
    layers: usize,
) -> Result<(DenseMatrix, DenseMatrix)> {
    if user_emb.rows() != graph.num_users() || item_emb.rows() != graph.num_items() {
        return Err(Error::shape(
            "propagate_and_concat",
            (graph.num_users(), graph.num_items()),
            (user_emb.rows(), item_emb.rows()),
        ));
    }
    let mut current = user_emb.vstack(item_emb)?;
    let mut concat = current.clone();
    for _ in 0..layers {
        current = spmm(graph, &current)?;
        concat = concat.hcat(&current)?;
    }
    let nu = graph.num_users();
    Ok((concat.row_range(0, nu), concat.row_range(nu, graph.num_nodes())))
}

/// Gradient of [`propagate_and_concat`] with respect to the raw embeddings.
///
/// The normalized adjacency is symmetric, so the transpose product is another
/// `spmm`.
pub fn propagate_backward(
    graph: &DomainGraph,
    d_user_out: &DenseMatrix,
    d_item_out: &DenseMatrix,
    layers: usize,
) -> Result<(DenseMatrix, DenseMatrix)> {
    let d_all = d_user_out.vstack(d_item_out)?;
    if d_all.cols() % (layers + 1) != 0 {
        return Err(Error::shape("propagate_backward", d_all.shape(), (layers + 1, 0)));
    }
    let width = d_all.cols() / (layers + 1);
    let mut d_layer = d_all.col_range(layers * width, (layers + 1) * width);
    for k in (0..layers).rev() {
        let mut back = spmm(graph, &d_layer)?;
        back.add_assign(&d_all.col_range(k * width, (k + 1) * width))?;
        d_layer = back;
    }
    let nu = graph.num_users();
    Ok((d_layer.row_range(0, nu), d_layer.row_range(nu, graph.num_nodes())))
}

fn check_split_dims(cols: usize, embed_dim: usize) -> Result<()> {
    if embed_dim == 0 || !embed_dim.is_multiple_of(2) || !cols.is_multiple_of(embed_dim) {
        return Err(Error::Config(format!("cannot split width {cols} into even layer blocks of {embed_dim}")));
    }
    Ok(())
}

/// Splits every `embed_dim`-wide layer block into its first half (shared) and
/// second half (specific), keeping layer order.
pub fn split_user_embedding(user_out: &DenseMatrix, embed_dim: usize) -> Result<(DenseMatrix, DenseMatrix)> {
    check_split_dims(user_out.cols(), embed_dim)?;
    let half = embed_dim / 2;
    let width = user_out.cols() / 2;
    let mut shared = DenseMatrix::zeros(user_out.rows(), width);
    let mut specific = DenseMatrix::zeros(user_out.rows(), width);
    for r in 0..user_out.rows() {
        let src = user_out.row(r);
        for (b, block) in src.chunks_exact(embed_dim).enumerate() {
            shared.row_mut(r)[b * half..(b + 1) * half].copy_from_slice(&block[..half]);
            specific.row_mut(r)[b * half..(b + 1) * half].copy_from_slice(&block[half..]);
        }
    }
    Ok((shared, specific))
}

/// Inverse of [`split_user_embedding`].
pub fn merge_user_embedding(shared: &DenseMatrix, specific: &DenseMatrix, embed_dim: usize) -> Result<DenseMatrix> {
    if shared.shape() != specific.shape() {
        return Err(Error::shape("merge_user_embedding", shared.shape(), specific.shape()));
    }
    check_split_dims(shared.cols() * 2, embed_dim)?;
    let half = embed_dim / 2;
    let mut out = DenseMatrix::zeros(shared.rows(), shared.cols() * 2);
    for r in 0..shared.rows() {
        let (s, p) = (shared.row(r), specific.row(r));
        for (b, block) in out.row_mut(r).chunks_exact_mut(embed_dim).enumerate() {
            block[..half].copy_from_slice(&s[b * half..(b + 1) * half]);
            block[half..].copy_from_slice(&p[b * half..(b + 1) * half]);
        }
    }
    Ok(out)
}

/// Intermediates of one inter-domain enhancement.
#[derive(Debug, Clone)]
pub struct EnhanceCache {
    pub own: DenseMatrix,
    pub other: DenseMatrix,
    pub gamma: f64,
    /// Row sums of the query weights, `W_Q · 1`.
    pub query_row_sums: Vec<f64>,
    /// Per-user query sums, `Z (W_Q · 1)`.
    pub user_query_sums: Vec<f64>,
    /// `Zᵀ Z (W_Q · 1)`.
    pub weighted_features: Vec<f64>,
    /// Feature-related distribution: column sums of `QᵀK` over the query axis.
    pub distribution: Vec<f64>,
    /// Softmax of the other-domain half of `distribution`.
    pub softmax: Vec<f64>,
    /// `softmax · len`, mean value 1.
    pub gate: Vec<f64>,
}

/// Gradients of [`inter_domain_enhance`].
#[derive(Debug, Clone)]
pub struct EnhanceGrads {
    pub d_own: DenseMatrix,
    pub d_other: DenseMatrix,
    pub d_query: DenseMatrix,
    pub d_key: DenseMatrix,
}

/// Attention-gated fusion of the other domain's shared embedding into this one.
///
/// With `Z = own ‖ other`, `Q = Z W_Q`, `K = Z W_K` and `ATT = Qᵀ K`, the
/// distribution `p` sums `ATT` over its query axis. The other-domain half of
/// `p` is turned into a gate by `len · softmax`, and the result is
/// `gamma · own + (1 − gamma) · (other ⊙ gate)`.
///
/// `p = W_Kᵀ Zᵀ Z W_Q 1` is evaluated right to left so `ATT` is never formed.
pub fn inter_domain_enhance(
    own: &DenseMatrix,
    other: &DenseMatrix,
    w_query: &DenseMatrix,
    w_key: &DenseMatrix,
    gamma: f64,
) -> Result<(DenseMatrix, EnhanceCache)> {
    if own.shape() != other.shape() {
        return Err(Error::shape("inter_domain_enhance", own.shape(), other.shape()));
    }
    let width = own.cols();
    for w in [w_query, w_key] {
        if w.shape() != (2 * width, 2 * width) {
            return Err(Error::shape("inter_domain_enhance", (2 * width, 2 * width), w.shape()));
        }
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::Config(format!("fusion weight must lie in (0, 1], got {gamma}")));
    }

    let query_row_sums: Vec<f64> = w_query.iter_rows().map(|r| r.iter().sum()).collect();
    let user_query_sums: Vec<f64> = (0..own.rows())
        .map(|u| dot(own.row(u), &query_row_sums[..width]) + dot(other.row(u), &query_row_sums[width..]))
        .collect();
    let mut weighted_features = own.t_matvec(&user_query_sums)?;
    weighted_features.extend(other.t_matvec(&user_query_sums)?);
    let distribution = w_key.t_matvec(&weighted_features)?;

    let tail = &distribution[width..];
    let softmax = softmax(tail);
    let gate: Vec<f64> = softmax.iter().map(|s| s * width as f64).collect();

    let mut enhanced = DenseMatrix::zeros(own.rows(), width);
    for u in 0..own.rows() {
        let (a, b) = (own.row(u), other.row(u));
        for (j, e) in enhanced.row_mut(u).iter_mut().enumerate() {
            *e = gamma * a[j] + (1.0 - gamma) * (b[j] * gate[j]);
        }
    }
    let cache = EnhanceCache {
        own: own.clone(),
        other: other.clone(),
        gamma,
        query_row_sums,
        user_query_sums,
        weighted_features,
        distribution,
        softmax,
        gate,
    };
    Ok((enhanced, cache))
}

/// Back-propagates `d_enhanced` through [`inter_domain_enhance`].
pub fn inter_domain_enhance_backward(
    cache: &EnhanceCache,
    w_key: &DenseMatrix,
    d_enhanced: &DenseMatrix,
) -> Result<EnhanceGrads> {
    if d_enhanced.shape() != cache.own.shape() {
        return Err(Error::shape("inter_domain_enhance_backward", cache.own.shape(), d_enhanced.shape()));
    }
    let (n_users, width) = cache.own.shape();
    let full = 2 * width;
    let gamma = cache.gamma;

    let d_own_direct = d_enhanced.scaled(gamma);
    let mut d_other = DenseMatrix::zeros(n_users, width);
    let mut d_gate = vec![0.0; width];
    for u in 0..n_users {
        let dc = d_enhanced.row(u);
        let b = cache.other.row(u);
        let dst = d_other.row_mut(u);
        for j in 0..width {
            let g = (1.0 - gamma) * dc[j];
            dst[j] = g * cache.gate[j];
            d_gate[j] += g * b[j];
        }
    }

    // gate = n · softmax(t)  ⇒  dt = s ⊙ (n·dg − ⟨s, n·dg⟩)
    let scaled: Vec<f64> = d_gate.iter().map(|g| g * width as f64).collect();
    let inner = dot(&cache.softmax, &scaled);
    let mut d_dist = vec![0.0; full];
    for j in 0..width {
        d_dist[width + j] = cache.softmax[j] * (scaled[j] - inner);
    }

    // p = W_Kᵀ w
    let mut d_key = DenseMatrix::zeros(full, full);
    for a in 0..full {
        let wa = cache.weighted_features[a];
        for (dst, &dp) in d_key.row_mut(a).iter_mut().zip(&d_dist) {
            *dst = wa * dp;
        }
    }
    let d_weighted = w_key.matvec(&d_dist)?;

    // w = Zᵀ q,  q = Z r
    let mut d_own = d_own_direct;
    let mut d_user_query = vec![0.0; n_users];
    for u in 0..n_users {
        let q = cache.user_query_sums[u];
        let (a, b) = (cache.own.row(u), cache.other.row(u));
        d_user_query[u] = dot(a, &d_weighted[..width]) + dot(b, &d_weighted[width..]);
        let dq = d_user_query[u];
        let r = &cache.query_row_sums;
        for j in 0..width {
            d_own.row_mut(u)[j] += q * d_weighted[j] + dq * r[j];
        }
        let dst = d_other.row_mut(u);
        for j in 0..width {
            dst[j] += q * d_weighted[width + j] + dq * r[width + j];
        }
    }
    let mut d_row_sums = cache.own.t_matvec(&d_user_query)?;
    d_row_sums.extend(cache.other.t_matvec(&d_user_query)?);

    // r = W_Q 1
    let mut d_query = DenseMatrix::zeros(full, full);
    for (a, &g) in d_row_sums.iter().enumerate() {
        d_query.row_mut(a).fill(g);
    }

    Ok(EnhanceGrads { d_own, d_other, d_query, d_key })
}

pub fn softmax(v: &[f64]) -> Vec<f64> {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = v.iter().map(|x| (x - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Gradient reversal: identity forward, `−λ` times the upstream gradient backward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Grl {
    Reverse(f64),
    /// Ordinary identity backward; used to obtain the true gradient of the objective.
    PassThrough,
}

impl Grl {
    pub fn forward(&self, x: &DenseMatrix) -> DenseMatrix {
        x.clone()
    }

    pub fn backward(&self, upstream: &DenseMatrix) -> DenseMatrix {
        match *self {
            Grl::Reverse(lambda) => upstream.scaled(-lambda),
            Grl::PassThrough => upstream.clone(),
        }
    }
}

/// Forward of the reversal layer with strength `lambda`.
pub fn apply_grl(x: &DenseMatrix, lambda: f64) -> DenseMatrix {
    Grl::Reverse(lambda).forward(x)
}

/// Raw scores `⟨user_final[b], item_final[b]⟩`.
pub fn predict_scores(user_final: &DenseMatrix, item_final: &DenseMatrix) -> Result<Vec<f64>> {
    if user_final.shape() != item_final.shape() {
        return Err(Error::shape("predict_scores", user_final.shape(), item_final.shape()));
    }
    Ok(user_final.iter_rows().zip(item_final.iter_rows()).map(|(u, i)| dot(u, i)).collect())
}
