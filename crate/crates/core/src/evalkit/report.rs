use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::Domain;
use crate::error::{Error, Result};
use crate::model::Variant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalSplit {
    Validation,
    Test,
}

impl EvalSplit {
    pub fn name(self) -> &'static str {
        match self {
            EvalSplit::Validation => "validation",
            EvalSplit::Test => "test",
        }
    }

    pub fn mask_policy(self) -> &'static str {
        match self {
            EvalSplit::Validation => "train",
            EvalSplit::Test => "train+validation",
        }
    }
}

impl fmt::Display for EvalSplit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EvalSplit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "validation" => Ok(EvalSplit::Validation),
            "test" => Ok(EvalSplit::Test),
            other => Err(Error::Config(format!("unknown split {other:?}; expected validation or test"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DomainMetrics {
    pub recall: f64,
    pub ndcg: f64,
    /// Users with at least one relevant item.
    pub evaluated: usize,
    /// Users without relevant items, left out of the means.
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunMeta {
    pub seed: u64,
    pub variant: Variant,
    pub config_digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub split: EvalSplit,
    pub k: usize,
    pub masked_items_policy: String,
    pub domains: [DomainMetrics; 2],
    pub meta: RunMeta,
}

impl EvalReport {
    pub fn domain(&self, d: Domain) -> &DomainMetrics {
        &self.domains[d.index()]
    }

    /// Mean of the two domains' NDCG, the early-stopping metric.
    pub fn mean_ndcg(&self) -> f64 {
        (self.domains[0].ndcg + self.domains[1].ndcg) / 2.0
    }

    pub fn with_meta(mut self, meta: RunMeta) -> Self {
        self.meta = meta;
        self
    }

    /// `key: value` lines.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "split: {}", self.split);
        let _ = writeln!(s, "k: {}", self.k);
        let _ = writeln!(s, "masked_items: {}", self.masked_items_policy);
        let _ = writeln!(s, "seed: {}", self.meta.seed);
        let _ = writeln!(s, "variant: {}", self.meta.variant);
        let _ = writeln!(s, "config_digest: {}", self.meta.config_digest);
        for d in Domain::BOTH {
            let m = self.domain(d);
            let t = d.tag();
            let _ = writeln!(s, "{t}.recall@{}: {}", self.k, m.recall);
            let _ = writeln!(s, "{t}.ndcg@{}: {}", self.k, m.ndcg);
            let _ = writeln!(s, "{t}.evaluated_users: {}", m.evaluated);
            let _ = writeln!(s, "{t}.skipped_users: {}", m.skipped);
        }
        s
    }

    pub fn summary_header() -> &'static str {
        "variant\tseed\tsplit\tk\tx_recall\tx_ndcg\ty_recall\ty_ndcg\tx_recall_pct\tx_ndcg_pct\ty_recall_pct\ty_ndcg_pct\tconfig_digest"
    }

    /// One tab-separated row matching `summary_header`.
    pub fn summary_row(&self) -> String {
        let [x, y] = &self.domains;
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{}",
            self.meta.variant,
            self.meta.seed,
            self.split,
            self.k,
            x.recall,
            x.ndcg,
            y.recall,
            y.ndcg,
            100.0 * x.recall,
            100.0 * x.ndcg,
            100.0 * y.recall,
            100.0 * y.ndcg,
            self.meta.config_digest
        )
    }
}
