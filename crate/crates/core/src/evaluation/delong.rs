//! DeLong variance and confidence interval for the AUROC, in the sort-based
//! midrank formulation that runs in O(n log n).

use super::auc::midranks;
use super::EvalError;
use crate::stats::{sample_variance, z_critical};

/// AUROC point estimate with DeLong variance and a Wald confidence interval
/// clamped to [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DelongCi {
    pub auc: f64,
    pub variance: f64,
    pub lower: f64,
    pub upper: f64,
}

/// DeLong AUROC confidence interval at level 1 - alpha.
///
/// The variance comes from the structural components: for each positive the
/// mean win/tie/loss score against all negatives and vice versa, combined as
/// S10/n_pos + S01/n_neg with unbiased sample variances. Midranks replace
/// the pairwise enumeration.
///
/// Requires at least two observations of each class.
pub fn delong_ci(scores: &[f64], labels: &[bool], alpha: f64) -> Result<DelongCi, EvalError> {
    if scores.len() != labels.len() {
        return Err(EvalError::LengthMismatch {
            left: scores.len(),
            right: labels.len(),
        });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(EvalError::NonFiniteScore);
    }
    let pos: Vec<f64> = scores
        .iter()
        .zip(labels)
        .filter(|(_, &l)| l)
        .map(|(&s, _)| s)
        .collect();
    let neg: Vec<f64> = scores
        .iter()
        .zip(labels)
        .filter(|(_, &l)| !l)
        .map(|(&s, _)| s)
        .collect();
    let m = pos.len();
    let n = neg.len();
    if m < 2 || n < 2 {
        return Err(EvalError::TooFewPerClass {
            positives: m,
            negatives: n,
        });
    }

    let mut combined = Vec::with_capacity(m + n);
    combined.extend_from_slice(&pos);
    combined.extend_from_slice(&neg);
    let tz = midranks(&combined);
    let tx = midranks(&pos);
    let ty = midranks(&neg);

    // Placement values: for positive i, (TZ - TX)/n is its mean win/tie
    // score against the negatives; symmetrically for negatives.
    let v10: Vec<f64> = (0..m).map(|i| (tz[i] - tx[i]) / n as f64).collect();
    let v01: Vec<f64> = (0..n).map(|j| 1.0 - (tz[m + j] - ty[j]) / m as f64).collect();

    let mf = m as f64;
    let nf = n as f64;
    let auc = (tz[..m].iter().sum::<f64>() - mf * (mf + 1.0) / 2.0) / (mf * nf);
    let s10 = sample_variance(&v10);
    let s01 = sample_variance(&v01);
    let variance = s10 / mf + s01 / nf;

    let half = z_critical(alpha) * variance.max(0.0).sqrt();
    Ok(DelongCi {
        auc,
        variance,
        lower: (auc - half).clamp(0.0, 1.0),
        upper: (auc + half).clamp(0.0, 1.0),
    })
}
