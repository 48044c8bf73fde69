//! Self-describing model files: a JSON container with a kind tag,
//! hyperparameters, parameters, seed, and a training-data digest. JSON f64
//! serialization uses shortest round-trip formatting, so parameters survive
//! save/load bit-exactly.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{DensityClassifier, FeatureRow, ForestModel, LogRegModel, MlpModel};
use crate::density::{Density, DensityDistribution};
use crate::stats::fnv1a64;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelIoError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("bad_model_file: {0}")]
    BadModelFile(String),
    #[error("model format version {found} unsupported (expected {MODEL_FORMAT_VERSION})")]
    VersionMismatch { found: u32 },
    #[error("model kind mismatch: expected {expected}, found {found}")]
    KindMismatch {
        expected: &'static str,
        found: &'static str,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Logreg,
    Forest,
    Mlp,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Logreg => "logreg",
            ModelKind::Forest => "forest",
            ModelKind::Mlp => "mlp",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "logreg" => Ok(ModelKind::Logreg),
            "forest" => Ok(ModelKind::Forest),
            "mlp" => Ok(ModelKind::Mlp),
            other => Err(format!("unknown model kind {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)] // one short-lived container per run
pub enum ModelPayload {
    Logreg(LogRegModel),
    Forest(ForestModel),
    Mlp(MlpModel),
}

impl ModelPayload {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelPayload::Logreg(_) => ModelKind::Logreg,
            ModelPayload::Forest(_) => ModelKind::Forest,
            ModelPayload::Mlp(_) => ModelKind::Mlp,
        }
    }
}

impl DensityClassifier for ModelPayload {
    fn predict_proba(&self, x: &FeatureRow) -> DensityDistribution {
        match self {
            ModelPayload::Logreg(m) => m.predict_proba(x),
            ModelPayload::Forest(m) => m.predict_proba(x),
            ModelPayload::Mlp(m) => m.predict_proba(x),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub tool_version: String,
    pub seed: u64,
    /// Digest of the training data, for provenance checks at load time.
    pub training_digest: String,
    #[serde(flatten)]
    pub payload: ModelPayload,
}

impl ModelFile {
    pub fn new(payload: ModelPayload, seed: u64, training_digest: String) -> Self {
        ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            training_digest,
            payload,
        }
    }

    pub fn into_logreg(self) -> Result<LogRegModel, ModelIoError> {
        match self.payload {
            ModelPayload::Logreg(m) => Ok(m),
            other => Err(ModelIoError::KindMismatch {
                expected: "logreg",
                found: other.kind().as_str(),
            }),
        }
    }

    pub fn into_forest(self) -> Result<ForestModel, ModelIoError> {
        match self.payload {
            ModelPayload::Forest(m) => Ok(m),
            other => Err(ModelIoError::KindMismatch {
                expected: "forest",
                found: other.kind().as_str(),
            }),
        }
    }

    pub fn into_mlp(self) -> Result<MlpModel, ModelIoError> {
        match self.payload {
            ModelPayload::Mlp(m) => Ok(m),
            other => Err(ModelIoError::KindMismatch {
                expected: "mlp",
                found: other.kind().as_str(),
            }),
        }
    }
}

/// Fingerprint of a training set: FNV-1a over the feature bit patterns and
/// labels, hex encoded.
pub fn training_digest(x: &[FeatureRow], y: &[Density]) -> String {
    let mut bytes = Vec::with_capacity(x.len() * (16 * 8 + 1));
    for (row, label) in x.iter().zip(y) {
        for v in row {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        bytes.push(label.index() as u8);
    }
    format!("{:016x}", fnv1a64(&bytes))
}

pub fn save_model(file: &ModelFile, path: &Path) -> Result<(), ModelIoError> {
    let json = serde_json::to_string_pretty(file)
        .map_err(|e| ModelIoError::BadModelFile(e.to_string()))?;
    std::fs::write(path, json).map_err(|source| ModelIoError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_model(path: &Path) -> Result<ModelFile, ModelIoError> {
    let text = std::fs::read_to_string(path).map_err(|source| ModelIoError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let file: ModelFile =
        serde_json::from_str(&text).map_err(|e| ModelIoError::BadModelFile(e.to_string()))?;
    if file.format_version != MODEL_FORMAT_VERSION {
        return Err(ModelIoError::VersionMismatch {
            found: file.format_version,
        });
    }
    Ok(file)
}
