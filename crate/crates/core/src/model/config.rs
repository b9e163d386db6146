use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which parts of the network are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    #[default]
    Full,
    /// Raw layer-0 embeddings only (no graph propagation).
    NoGraph,
    /// No inter-domain enhancement (`gamma_s = gamma_t = 1`).
    NoArem,
    /// No adversarial domain classifier (`lambda1 = 0`).
    NoIrlm,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Full, Variant::NoGraph, Variant::NoArem, Variant::NoIrlm];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::NoGraph => "no_graph",
            Variant::NoArem => "no_arem",
            Variant::NoIrlm => "no_irlm",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL.into_iter().find(|v| v.name() == s.trim()).ok_or_else(|| {
            Error::Config(format!("unknown variant {s:?}; valid variants are full, no_graph, no_arem, no_irlm"))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    /// Per-layer embedding width `d`; must be even.
    pub embed_dim: usize,
    /// Graph propagation depth `K`.
    pub gcn_layers: usize,
    /// Fusion weight of the X domain's own shared embedding.
    pub gamma_s: f64,
    /// Fusion weight of the Y domain's own shared embedding.
    pub gamma_t: f64,
    /// Weight of the domain-classification loss.
    pub lambda1: f64,
    /// Weight of the squared-norm regularizer.
    pub lambda2: f64,
    /// Final strength of the gradient reversal.
    pub grl_lambda_max: f64,
    /// Classifier hidden width; half the shared width when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classifier_hidden: Option<usize>,
    pub variant: Variant,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            embed_dim: 64,
            gcn_layers: 3,
            gamma_s: 0.9,
            gamma_t: 0.9,
            lambda1: 0.1,
            lambda2: 1e-5,
            grl_lambda_max: 1.0,
            classifier_hidden: None,
            variant: Variant::Full,
        }
    }
}

impl ModelConfig {
    /// Validates the configuration and applies the variant's overrides.
    pub fn resolved(&self) -> Result<ModelConfig> {
        let mut cfg = self.clone();
        match cfg.variant {
            Variant::Full => {}
            Variant::NoGraph => cfg.gcn_layers = 0,
            Variant::NoArem => {
                cfg.gamma_s = 1.0;
                cfg.gamma_t = 1.0;
            }
            Variant::NoIrlm => cfg.lambda1 = 0.0,
        }
        if cfg.embed_dim == 0 || !cfg.embed_dim.is_multiple_of(2) {
            return Err(Error::Config(format!("embed_dim must be a positive even number, got {}", cfg.embed_dim)));
        }
        for (name, g) in [("gamma_s", cfg.gamma_s), ("gamma_t", cfg.gamma_t)] {
            if !(g > 0.0 && g <= 1.0) {
                return Err(Error::Config(format!("{name} must lie in (0, 1], got {g}")));
            }
        }
        for (name, v) in [("lambda1", cfg.lambda1), ("lambda2", cfg.lambda2), ("grl_lambda_max", cfg.grl_lambda_max)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        if cfg.classifier_hidden == Some(0) {
            return Err(Error::Config("classifier_hidden must be positive".into()));
        }
        Ok(cfg)
    }

    /// Width of the concatenated multi-layer embedding, `(K + 1) d`.
    pub fn full_dim(&self) -> usize {
        (self.gcn_layers + 1) * self.embed_dim
    }

    /// Width of the shared (and of the specific) part, `(K + 1) d / 2`.
    pub fn shared_dim(&self) -> usize {
        self.full_dim() / 2
    }

    pub fn hidden_dim(&self) -> usize {
        self.classifier_hidden.unwrap_or_else(|| (self.shared_dim() / 2).max(1))
    }

    pub fn gamma(&self, d: crate::corpus::Domain) -> f64 {
        match d {
            crate::corpus::Domain::X => self.gamma_s,
            crate::corpus::Domain::Y => self.gamma_t,
        }
    }
}
