//! The dual-domain network: disentangled user embeddings, graph propagation,
//! attention-gated inter-domain fusion, and the adversarial domain classifier.

mod backward;
mod classifier;
mod config;
mod layers;
mod state;

pub use backward::{backward_embeddings, EmbeddingUpstream};
pub use classifier::{
    bce_with_logits, classification_loss, domain_classify, domain_classify_backward, sigmoid, ClassificationOutput,
    ClassifierCache, ClassifierGrads, ClassifierWeights, PROB_FLOOR,
};
pub use config::{ModelConfig, Variant};
pub use layers::{
    apply_grl, inter_domain_enhance, inter_domain_enhance_backward, merge_user_embedding, predict_scores,
    propagate_and_concat, propagate_backward, softmax, split_user_embedding, EnhanceCache, EnhanceGrads, Grl,
};
pub use state::{classifier_weights, compute_embeddings, param, DomainEmbeddings, Embeddings, ModelDims, ModelState};
