use crate::corpus::{Domain, DomainGraph};
use crate::error::Result;
use crate::model::{
    backward_embeddings, bce_with_logits, classification_loss, classifier_weights, compute_embeddings, param,
    predict_scores, split_user_embedding, EmbeddingUpstream, Grl, ModelConfig,
};
use crate::numcore::{DenseMatrix, ParameterStore};
use crate::trainer::TrainBatch;

/// Loss components of one objective evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossBreakdown {
    /// Recommendation cross-entropy, summed over the two domains.
    pub rec: f64,
    pub cls_specific: f64,
    pub cls_shared: f64,
    /// Squared norm of every trainable parameter.
    pub reg: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub fn cls(&self) -> f64 {
        self.cls_specific + self.cls_shared
    }

    pub fn is_finite(&self) -> bool {
        [self.rec, self.cls_specific, self.cls_shared, self.reg, self.total].iter().all(|v| v.is_finite())
    }
}

/// Whether parameter `idx` is optimized. The classifier is frozen when it has
/// no loss weight, so it is also excluded from the regularizer.
pub fn is_trainable(cfg: &ModelConfig, idx: usize) -> bool {
    cfg.lambda1 > 0.0 || !param::CLASSIFIER.contains(&idx)
}

fn batch_users(batch: &TrainBatch) -> Vec<usize> {
    let mut users: Vec<usize> = batch.x.iter().chain(&batch.y).map(|s| s.user).collect();
    users.sort_unstable();
    users.dedup();
    users
}

/// `L = L_rec + λ1 L_cls + λ2 L_reg` and, when requested, its gradient in store order.
///
/// The domain classifier sees the distinct users of the batch. With
/// `Grl::PassThrough` the returned gradient is the exact gradient of `L`; with
/// `Grl::Reverse(λ)` the shared-embedding branch of the classification term is
/// reversed and scaled.
pub fn objective(
    cfg: &ModelConfig,
    store: &ParameterStore,
    graphs: [&DomainGraph; 2],
    batch: &TrainBatch,
    grl: Grl,
    want_grad: bool,
) -> Result<(LossBreakdown, Option<Vec<DenseMatrix>>)> {
    let emb = compute_embeddings(cfg, store, graphs)?;
    let mut losses = LossBreakdown::default();
    let mut upstream: [EmbeddingUpstream; 2] = Domain::BOTH.map(|d| {
        let e = emb.domain(d);
        EmbeddingUpstream::zeros(e.user_final.rows(), e.item_out.rows(), cfg)
    });

    for d in Domain::BOTH {
        let samples = batch.domain(d);
        if samples.is_empty() {
            continue;
        }
        let e = emb.domain(d);
        let users: Vec<usize> = samples.iter().map(|s| s.user).collect();
        let items: Vec<usize> = samples.iter().map(|s| s.item).collect();
        let labels: Vec<f64> = samples.iter().map(|s| s.label).collect();
        let user_rows = e.user_final.gather_rows(&users);
        let item_rows = e.item_out.gather_rows(&items);
        let scores = predict_scores(&user_rows, &item_rows)?;
        let (loss, d_scores) = bce_with_logits(&scores, &labels)?;
        losses.rec += loss;
        if want_grad {
            let mut d_user_final = DenseMatrix::zeros(e.user_final.rows(), e.user_final.cols());
            let up = &mut upstream[d.index()];
            for (k, &ds) in d_scores.iter().enumerate() {
                for (g, &v) in d_user_final.row_mut(users[k]).iter_mut().zip(item_rows.row(k)) {
                    *g += ds * v;
                }
                for (g, &v) in up.d_item_out.row_mut(items[k]).iter_mut().zip(user_rows.row(k)) {
                    *g += ds * v;
                }
            }
            let (d_enh, d_spec) = split_user_embedding(&d_user_final, cfg.embed_dim)?;
            up.d_enhanced = d_enh;
            up.d_specific = d_spec;
        }
    }

    let mut grads: Vec<DenseMatrix> = if want_grad {
        store.iter().map(|p| DenseMatrix::zeros(p.value.rows(), p.value.cols())).collect()
    } else {
        Vec::new()
    };

    let cls_users = batch_users(batch);
    if !cls_users.is_empty() {
        let [ex, ey] = &emb.domains;
        let cls = classification_loss(
            &classifier_weights(store),
            &ex.enhanced.gather_rows(&cls_users),
            &ey.enhanced.gather_rows(&cls_users),
            &ex.specific.gather_rows(&cls_users),
            &ey.specific.gather_rows(&cls_users),
            grl,
        )?;
        losses.cls_specific = cls.loss_specific;
        losses.cls_shared = cls.loss_shared;
        if want_grad && cfg.lambda1 > 0.0 {
            let l1 = cfg.lambda1;
            let [ux, uy] = &mut upstream;
            ux.d_enhanced.scatter_add_rows(&cls_users, &cls.d_shared_x, l1);
            uy.d_enhanced.scatter_add_rows(&cls_users, &cls.d_shared_y, l1);
            ux.d_specific.scatter_add_rows(&cls_users, &cls.d_specific_x, l1);
            uy.d_specific.scatter_add_rows(&cls_users, &cls.d_specific_y, l1);
            grads[param::CLS_W1].add_scaled(&cls.grads.w1, l1)?;
            grads[param::CLS_B1].add_scaled(&cls.grads.b1, l1)?;
            grads[param::CLS_W2].add_scaled(&cls.grads.w2, l1)?;
            grads[param::CLS_B2].add_scaled(&cls.grads.b2, l1)?;
        }
    }

    for (idx, p) in store.iter().enumerate() {
        if is_trainable(cfg, idx) {
            losses.reg += p.value.squared_norm();
            if want_grad {
                grads[idx].add_scaled(&p.value, 2.0 * cfg.lambda2)?;
            }
        }
    }
    losses.total = losses.rec + cfg.lambda1 * losses.cls() + cfg.lambda2 * losses.reg;

    if !want_grad {
        return Ok((losses, None));
    }
    backward_embeddings(cfg, store, graphs, &emb, &upstream, &mut grads)?;
    Ok((losses, Some(grads)))
}
