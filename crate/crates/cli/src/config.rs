//! Run configuration: one JSON file drives the whole chain, so a run is
//! reproducible from the file plus nothing else. CLI flags may override the
//! seed and output directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use busdensity::classifiers::{ForestConfig, LogRegConfig, MlpConfig};
use busdensity::cohort::MatchKey;
use busdensity::imaging::CleaningConfig;
use busdensity::stats::fnv1a64;
use busdensity::synth::SynthConfig;

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelConfig {
    Logreg(LogRegConfig),
    Forest(ForestConfig),
    Mlp(MlpConfig),
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig::Logreg(LogRegConfig::default())
    }
}

impl ModelConfig {
    pub fn kind_str(&self) -> &'static str {
        match self {
            ModelConfig::Logreg(_) => "logreg",
            ModelConfig::Forest(_) => "forest",
            ModelConfig::Mlp(_) => "mlp",
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MatchingConfig {
    pub key: MatchKey,
    pub ratio: u32,
}

impl Default for MatchingConfig {
    fn default() -> Self {
        MatchingConfig {
            key: MatchKey::BirthYear,
            ratio: 5,
        }
    }
}

fn default_fractions() -> Vec<f64> {
    vec![0.8, 0.2]
}

fn default_risk_folds() -> usize {
    3
}

fn default_risk_draws() -> usize {
    100
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed; every stage derives its own stream from it.
    pub seed: u64,
    /// All artifacts live under this directory.
    pub out_dir: PathBuf,
    /// Cohort manifest; defaults to `<out_dir>/manifest.csv` (the synth
    /// stage output).
    #[serde(default)]
    pub manifest: Option<PathBuf>,
    #[serde(default = "default_fractions")]
    pub split_fractions: Vec<f64>,
    /// Min-max normalize intensities before histogram binning.
    #[serde(default)]
    pub normalize_features: bool,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub matching: MatchingConfig,
    #[serde(default = "default_risk_folds")]
    pub risk_folds: usize,
    /// Simulated density draws per woman in the risk fit.
    #[serde(default = "default_risk_draws")]
    pub risk_draws: usize,
    #[serde(default)]
    pub cleaning: CleaningConfig,
    #[serde(default)]
    pub synth: SynthConfig,
}

impl RunConfig {
    pub fn load(path: &Path, seed: Option<u64>, out: Option<PathBuf>) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Validation(format!("cannot read config {}: {e}", path.display()))
        })?;
        let mut config: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("bad config {}: {e}", path.display())))?;
        if let Some(seed) = seed {
            config.seed = seed;
        }
        if let Some(out) = out {
            config.out_dir = out;
        }
        if config.split_fractions.is_empty() {
            return Err(CliError::Validation("split_fractions must not be empty".into()));
        }
        Ok(config)
    }

    /// Digest of the effective configuration (after flag overrides).
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        format!("{:016x}", fnv1a64(json.as_bytes()))
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.manifest
            .clone()
            .unwrap_or_else(|| self.out_dir.join("manifest.csv"))
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }
}
