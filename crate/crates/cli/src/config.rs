use std::fs;
use std::path::{Path, PathBuf};

use areil_core::evalkit::{EvalSplit, ProbeConfig};
use areil_core::model::{ModelConfig, Variant};
use areil_core::trainer::TrainConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataSection {
    /// Raw rating log of domain X (`user,item,rating[,timestamp]`).
    pub raw_x: Option<PathBuf>,
    pub raw_y: Option<PathBuf>,
    /// Ratings at or above this value are positives.
    pub positive_threshold: f64,
    pub delimiter: char,
    pub split_seed: u64,
    /// Output of `prepare`, input of every other command.
    pub prepared_dir: PathBuf,
}

impl Default for DataSection {
    fn default() -> Self {
        Self {
            raw_x: None,
            raw_y: None,
            positive_threshold: 0.0,
            delimiter: ',',
            split_seed: 2024,
            prepared_dir: PathBuf::from("prepared"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSection {
    pub k: usize,
    pub split: EvalSplit,
    pub variants: Vec<Variant>,
    pub probe_iterations: usize,
    pub probe_learning_rate: f64,
    pub probe_seed: u64,
}

impl Default for EvalSection {
    fn default() -> Self {
        let probe = ProbeConfig::default();
        Self {
            k: 20,
            split: EvalSplit::Test,
            variants: Variant::ALL.to_vec(),
            probe_iterations: probe.iterations,
            probe_learning_rate: probe.learning_rate,
            probe_seed: probe.seed,
        }
    }
}

impl EvalSection {
    pub fn probe(&self) -> ProbeConfig {
        ProbeConfig {
            iterations: self.probe_iterations,
            learning_rate: self.probe_learning_rate,
            seed: self.probe_seed,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("runs/areil") }
    }
}

/// Everything a command needs, read from one TOML file.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub data: DataSection,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub eval: EvalSection,
    pub output: OutputSection,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Core(areil_core::Error::io(path, e)))?;
        Self::parse(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        cfg.model.resolved().map_err(|e| e.to_string())?;
        cfg.train.validate().map_err(|e| e.to_string())?;
        if cfg.eval.k == 0 {
            return Err("eval.k must be at least 1".into());
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    /// SHA-256 of the canonical serialization, so formatting and comments in
    /// the source file do not matter.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    /// Writes the effective configuration next to a command's outputs.
    pub fn write_effective(&self, dir: &Path) -> Result<(), CliError> {
        let path = dir.join("run.toml");
        let text = format!("# config_digest = \"{}\"\n{}", self.digest(), self.to_toml());
        fs::write(&path, text).map_err(|e| CliError::Core(areil_core::Error::io(path, e)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::default();
        assert_eq!(RunConfig::parse(&cfg.to_toml()).unwrap(), cfg);
        assert_eq!(RunConfig::parse("").unwrap(), cfg);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::parse("[model]\nembed_dimm = 8\n").is_err());
        assert!(RunConfig::parse("[modle]\n").is_err());
        assert!(RunConfig::parse("[model]\nembed_dim = 7\n").is_err());
    }

    #[test]
    fn digest_ignores_formatting() {
        let a = RunConfig::parse("[train]\nseed = 5\n").unwrap();
        let b = RunConfig::parse("# comment\n[train]\nseed   =   5\n").unwrap();
        assert_eq!(a.digest(), b.digest());
        assert_ne!(a.digest(), RunConfig::default().digest());
        assert_eq!(a.digest().len(), 64);
    }
}
