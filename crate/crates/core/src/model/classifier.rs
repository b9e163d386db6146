//! The shared domain classifier and binary cross-entropy.

use crate::error::{Error, Result};
use crate::model::layers::Grl;
use crate::numcore::DenseMatrix;

pub const PROB_FLOOR: f64 = 1e-12;

/// Borrowed classifier weights: `input · w1 + b1 → ReLU → · w2 + b2`.
#[derive(Debug, Clone, Copy)]
pub struct ClassifierWeights<'a> {
    pub w1: &'a DenseMatrix,
    pub b1: &'a DenseMatrix,
    pub w2: &'a DenseMatrix,
    pub b2: &'a DenseMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierGrads {
    pub w1: DenseMatrix,
    pub b1: DenseMatrix,
    pub w2: DenseMatrix,
    pub b2: DenseMatrix,
}

impl ClassifierGrads {
    pub fn zeros_like(w: &ClassifierWeights<'_>) -> Self {
        let z = |m: &DenseMatrix| DenseMatrix::zeros(m.rows(), m.cols());
        Self { w1: z(w.w1), b1: z(w.b1), w2: z(w.w2), b2: z(w.b2) }
    }

    fn add_assign(&mut self, o: &ClassifierGrads) {
        // Shapes match by construction.
        self.w1.add_assign(&o.w1).unwrap();
        self.b1.add_assign(&o.b1).unwrap();
        self.w2.add_assign(&o.w2).unwrap();
        self.b2.add_assign(&o.b2).unwrap();
    }
}

#[derive(Debug, Clone)]
pub struct ClassifierCache {
    input: DenseMatrix,
    pre_activation: DenseMatrix,
    hidden: DenseMatrix,
}

/// Logits of the domain classifier, one per input row; `σ(logit)` is P(domain Y).
pub fn domain_classify(w: &ClassifierWeights<'_>, input: &DenseMatrix) -> Result<(Vec<f64>, ClassifierCache)> {
    let hidden_dim = w.w1.cols();
    if input.cols() != w.w1.rows()
        || w.b1.shape() != (1, hidden_dim)
        || w.w2.shape() != (hidden_dim, 1)
        || w.b2.shape() != (1, 1)
    {
        return Err(Error::shape("domain_classify", input.shape(), w.w1.shape()));
    }
    let mut pre = input.matmul(w.w1)?;
    for r in 0..pre.rows() {
        for (p, &b) in pre.row_mut(r).iter_mut().zip(w.b1.row(0)) {
            *p += b;
        }
    }
    let mut hidden = pre.clone();
    hidden.data_mut().iter_mut().for_each(|h| *h = h.max(0.0));
    let b2 = w.b2.get(0, 0);
    let logits = hidden.matvec(w.w2.data())?.into_iter().map(|z| z + b2).collect();
    Ok((logits, ClassifierCache { input: input.clone(), pre_activation: pre, hidden }))
}

/// Returns the gradient with respect to the input rows and the weights.
pub fn domain_classify_backward(
    w: &ClassifierWeights<'_>,
    cache: &ClassifierCache,
    d_logits: &[f64],
) -> Result<(DenseMatrix, ClassifierGrads)> {
    let rows = cache.hidden.rows();
    if d_logits.len() != rows {
        return Err(Error::shape("domain_classify_backward", (rows, 1), (d_logits.len(), 1)));
    }
    let d_w2 = DenseMatrix::from_vec(w.w2.rows(), 1, cache.hidden.t_matvec(d_logits)?)?;
    let d_b2 = DenseMatrix::filled(1, 1, d_logits.iter().sum());
    let mut d_pre = DenseMatrix::zeros(rows, w.w1.cols());
    for r in 0..rows {
        let pre = cache.pre_activation.row(r);
        for (k, d) in d_pre.row_mut(r).iter_mut().enumerate() {
            if pre[k] > 0.0 {
                *d = d_logits[r] * w.w2.get(k, 0);
            }
        }
    }
    let d_w1 = cache.input.t_matmul(&d_pre)?;
    let d_b1 = DenseMatrix::from_vec(1, w.w1.cols(), d_pre.column_sums())?;
    let d_input = d_pre.matmul_t(w.w1)?;
    Ok((d_input, ClassifierGrads { w1: d_w1, b1: d_b1, w2: d_w2, b2: d_b2 }))
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

// −ln(clamp(σ(z))) and its derivative in z, zero where the clamp is active.
fn neg_log_sigmoid(z: f64) -> (f64, f64) {
    let p = sigmoid(z);
    if p < PROB_FLOOR {
        (-PROB_FLOOR.ln(), 0.0)
    } else if p > 1.0 - PROB_FLOOR {
        (-(1.0 - PROB_FLOOR).ln(), 0.0)
    } else {
        // softplus(−z), evaluated without cancellation
        let loss = (-z).max(0.0) + (-z.abs()).exp().ln_1p();
        (loss, p - 1.0)
    }
}

/// Mean binary cross-entropy of `σ(logits)` against `labels`, with the
/// probabilities clamped to `[1e-12, 1 − 1e-12]`. Also returns `dloss/dlogit`.
pub fn bce_with_logits(logits: &[f64], labels: &[f64]) -> Result<(f64, Vec<f64>)> {
    if logits.len() != labels.len() {
        return Err(Error::shape("bce_with_logits", (logits.len(), 1), (labels.len(), 1)));
    }
    if logits.is_empty() {
        return Ok((0.0, Vec::new()));
    }
    let n = logits.len() as f64;
    let mut total = 0.0;
    let mut grad = Vec::with_capacity(logits.len());
    for (&z, &y) in logits.iter().zip(labels) {
        // −[y ln p + (1−y) ln(1−p)],  1 − σ(z) = σ(−z)
        let (l1, g1) = neg_log_sigmoid(z);
        let (l0, g0) = neg_log_sigmoid(-z);
        total += y * l1 + (1.0 - y) * l0;
        grad.push((y * g1 - (1.0 - y) * g0) / n);
    }
    Ok((total / n, grad))
}

/// The four-term domain-classification objective.
#[derive(Debug, Clone)]
pub struct ClassificationOutput {
    pub loss_specific: f64,
    pub loss_shared: f64,
    pub d_shared_x: DenseMatrix,
    pub d_shared_y: DenseMatrix,
    pub d_specific_x: DenseMatrix,
    pub d_specific_y: DenseMatrix,
    pub grads: ClassifierGrads,
}

impl ClassificationOutput {
    pub fn total(&self) -> f64 {
        self.loss_specific + self.loss_shared
    }
}

/// Specific embeddings are classified directly; shared embeddings pass
/// through the reversal layer first. X rows carry label 0, Y rows label 1.
pub fn classification_loss(
    w: &ClassifierWeights<'_>,
    shared_x: &DenseMatrix,
    shared_y: &DenseMatrix,
    specific_x: &DenseMatrix,
    specific_y: &DenseMatrix,
    grl: Grl,
) -> Result<ClassificationOutput> {
    let mut grads = ClassifierGrads::zeros_like(w);
    let mut term = |input: &DenseMatrix, label: f64| -> Result<(f64, DenseMatrix)> {
        let (logits, cache) = domain_classify(w, input)?;
        let labels = vec![label; logits.len()];
        let (loss, d_logits) = bce_with_logits(&logits, &labels)?;
        let (d_input, g) = domain_classify_backward(w, &cache, &d_logits)?;
        grads.add_assign(&g);
        Ok((loss, d_input))
    };
    let (l_spe_x, d_specific_x) = term(specific_x, 0.0)?;
    let (l_spe_y, d_specific_y) = term(specific_y, 1.0)?;
    let (l_sha_x, d_rev_x) = term(&grl.forward(shared_x), 0.0)?;
    let (l_sha_y, d_rev_y) = term(&grl.forward(shared_y), 1.0)?;
    Ok(ClassificationOutput {
        loss_specific: l_spe_x + l_spe_y,
        loss_shared: l_sha_x + l_sha_y,
        d_shared_x: grl.backward(&d_rev_x),
        d_shared_y: grl.backward(&d_rev_y),
        d_specific_x,
        d_specific_y,
        grads,
    })
}
