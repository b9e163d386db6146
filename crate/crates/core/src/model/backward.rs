use crate::corpus::{Domain, DomainGraph};
use crate::error::Result;
use crate::model::layers::{inter_domain_enhance_backward, merge_user_embedding, propagate_backward};
use crate::model::state::{param, Embeddings};
use crate::model::ModelConfig;
use crate::numcore::{DenseMatrix, ParameterStore};

/// Upstream gradients arriving at one domain's embedding outputs.
#[derive(Debug, Clone)]
pub struct EmbeddingUpstream {
    pub d_enhanced: DenseMatrix,
    pub d_specific: DenseMatrix,
    pub d_item_out: DenseMatrix,
}

impl EmbeddingUpstream {
    pub fn zeros(num_users: usize, num_items: usize, cfg: &ModelConfig) -> Self {
        Self {
            d_enhanced: DenseMatrix::zeros(num_users, cfg.shared_dim()),
            d_specific: DenseMatrix::zeros(num_users, cfg.shared_dim()),
            d_item_out: DenseMatrix::zeros(num_items, cfg.full_dim()),
        }
    }
}

/// Accumulates into `grads` (store order) the gradients of the embedding tables
/// and attention weights, given upstream gradients for both domains.
pub fn backward_embeddings(
    cfg: &ModelConfig,
    store: &ParameterStore,
    graphs: [&DomainGraph; 2],
    emb: &Embeddings,
    upstream: &[EmbeddingUpstream; 2],
    grads: &mut [DenseMatrix],
) -> Result<()> {
    // Each domain's fusion reads both domains' shared parts.
    let mut d_shared: [DenseMatrix; 2] = [
        DenseMatrix::zeros(upstream[0].d_enhanced.rows(), cfg.shared_dim()),
        DenseMatrix::zeros(upstream[1].d_enhanced.rows(), cfg.shared_dim()),
    ];
    for d in Domain::BOTH {
        let g = inter_domain_enhance_backward(
            &emb.domain(d).enhance_cache,
            store.value(param::key(d)),
            &upstream[d.index()].d_enhanced,
        )?;
        d_shared[d.index()].add_assign(&g.d_own)?;
        d_shared[d.other().index()].add_assign(&g.d_other)?;
        grads[param::query(d)].add_assign(&g.d_query)?;
        grads[param::key(d)].add_assign(&g.d_key)?;
    }
    for d in Domain::BOTH {
        let up = &upstream[d.index()];
        let d_user_out = merge_user_embedding(&d_shared[d.index()], &up.d_specific, cfg.embed_dim)?;
        let (d_user, d_item) = propagate_backward(graphs[d.index()], &d_user_out, &up.d_item_out, cfg.gcn_layers)?;
        grads[param::user(d)].add_assign(&d_user)?;
        grads[param::item(d)].add_assign(&d_item)?;
    }
    Ok(())
}
