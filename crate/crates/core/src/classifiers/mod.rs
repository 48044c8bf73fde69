//! From-scratch 4-class classifiers over the 16-bin histogram features:
//! multinomial logistic regression, random forest, and a one-hidden-layer
//! MLP, plus a self-describing model file format.

pub mod forest;
pub mod io;
pub mod logreg;
pub mod mlp;

pub use forest::{train_forest, ForestConfig, ForestModel};
pub use io::{load_model, save_model, ModelFile, ModelIoError, ModelKind, ModelPayload};
pub use logreg::{train_logreg, LogRegConfig, LogRegModel, Penalty};
pub use mlp::{train_mlp, MlpConfig, MlpModel};

use thiserror::Error;

use crate::density::{Density, DensityDistribution};
use crate::features::N_BINS;

/// One feature row.
pub type FeatureRow = [f64; N_BINS];

#[derive(Debug, Error, PartialEq)]
pub enum TrainError {
    #[error("empty training set")]
    EmptyDataset,
    #[error("feature and label counts differ: {x} vs {y}")]
    LengthMismatch { x: usize, y: usize },
    #[error("training labels contain a single class")]
    SingleClass,
    #[error("non-finite feature value")]
    NonFiniteFeature,
    #[error("validation set is empty")]
    EmptyValidation,
}

/// Anything that maps a feature row to a density distribution.
pub trait DensityClassifier {
    fn predict_proba(&self, x: &FeatureRow) -> DensityDistribution;

    fn predict(&self, x: &FeatureRow) -> Density {
        self.predict_proba(x).argmax()
    }
}

pub(crate) fn validate_training(x: &[FeatureRow], y: &[Density]) -> Result<(), TrainError> {
    if x.len() != y.len() {
        return Err(TrainError::LengthMismatch { x: x.len(), y: y.len() });
    }
    if x.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    if x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(TrainError::NonFiniteFeature);
    }
    let mut seen = [false; 4];
    for label in y {
        seen[label.index()] = true;
    }
    if seen.iter().filter(|&&s| s).count() < 2 {
        return Err(TrainError::SingleClass);
    }
    Ok(())
}

/// Numerically stable softmax over 4 logits.
pub(crate) fn softmax4(logits: [f64; 4]) -> [f64; 4] {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp = logits.map(|z| (z - max).exp());
    let sum: f64 = exp.iter().sum();
    exp.map(|e| e / sum)
}

/// log(sum(exp(logits))) with max subtraction.
pub(crate) fn log_sum_exp4(logits: [f64; 4]) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln()
}

pub(crate) fn distribution_from(probs: [f64; 4]) -> DensityDistribution {
    // renormalize away accumulated rounding before constructing
    let sum: f64 = probs.iter().sum();
    DensityDistribution::new(probs.map(|p| p / sum)).expect("classifier output on the simplex")
}

/// Convergence/loss trace returned alongside a fitted model.
#[derive(Debug, Clone, PartialEq)]
pub struct FitTrace {
    /// Full objective per iteration (logreg) or per epoch (MLP training loss).
    pub objective: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}
