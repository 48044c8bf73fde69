//! Multinomial logistic regression fit by full-batch proximal gradient
//! descent with backtracking line search. The objective is the summed
//! cross-entropy plus penalty/C on the weights (bias unpenalized); L1 is
//! handled by a soft-threshold proximal step, so the same solver covers the
//! L1, L2, and unpenalized variants of the one convex objective.

use serde::{Deserialize, Serialize};

use super::{
    distribution_from, log_sum_exp4, softmax4, validate_training, DensityClassifier, FeatureRow,
    FitTrace, TrainError,
};
use crate::density::{Density, DensityDistribution};
use crate::features::N_BINS;

pub const N_CLASSES: usize = 4;
/// Flat parameter length: 4x16 weights then 4 biases.
pub const N_PARAMS: usize = N_CLASSES * N_BINS + N_CLASSES;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Penalty {
    L1,
    L2,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRegConfig {
    /// Inverse regularization strength.
    pub c: f64,
    pub penalty: Penalty,
    pub max_iter: usize,
    /// Stop when the (proximal) gradient max-norm falls below this.
    pub tol: f64,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        LogRegConfig {
            c: 10.0,
            penalty: Penalty::L1,
            max_iter: 10_000,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegModel {
    /// Class-major weights, 4 rows of 16.
    pub weights: [[f64; N_BINS]; N_CLASSES],
    pub bias: [f64; N_CLASSES],
    pub config: LogRegConfig,
}

impl LogRegModel {
    fn logits(&self, x: &FeatureRow) -> [f64; N_CLASSES] {
        let mut z = self.bias;
        for (k, row) in self.weights.iter().enumerate() {
            z[k] += row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        }
        z
    }
}

impl DensityClassifier for LogRegModel {
    fn predict_proba(&self, x: &FeatureRow) -> DensityDistribution {
        distribution_from(softmax4(self.logits(x)))
    }
}

/// Summed cross-entropy over the data, plus the L2 term when `l2_inv_c` is
/// nonzero, on a flat parameter vector (weights row-major, then biases).
/// The L1 term is never part of the smooth objective.
pub fn smooth_objective(x: &[FeatureRow], y: &[Density], params: &[f64], l2_inv_c: f64) -> f64 {
    debug_assert_eq!(params.len(), N_PARAMS);
    let mut loss = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        let z = logits_flat(params, xi);
        loss += log_sum_exp4(z) - z[yi.index()];
    }
    if l2_inv_c != 0.0 {
        let sq: f64 = params[..N_CLASSES * N_BINS].iter().map(|w| w * w).sum();
        loss += 0.5 * l2_inv_c * sq;
    }
    loss
}

/// Analytic gradient of [`smooth_objective`].
pub fn smooth_gradient(x: &[FeatureRow], y: &[Density], params: &[f64], l2_inv_c: f64) -> Vec<f64> {
    debug_assert_eq!(params.len(), N_PARAMS);
    let mut grad = vec![0.0; N_PARAMS];
    for (xi, yi) in x.iter().zip(y) {
        let p = softmax4(logits_flat(params, xi));
        for k in 0..N_CLASSES {
            let residual = p[k] - if yi.index() == k { 1.0 } else { 0.0 };
            let row = &mut grad[k * N_BINS..(k + 1) * N_BINS];
            for (g, v) in row.iter_mut().zip(xi) {
                *g += residual * v;
            }
            grad[N_CLASSES * N_BINS + k] += residual;
        }
    }
    if l2_inv_c != 0.0 {
        for (g, w) in grad[..N_CLASSES * N_BINS]
            .iter_mut()
            .zip(&params[..N_CLASSES * N_BINS])
        {
            *g += l2_inv_c * w;
        }
    }
    grad
}

fn logits_flat(params: &[f64], x: &FeatureRow) -> [f64; N_CLASSES] {
    let mut z = [0.0; N_CLASSES];
    for (k, zk) in z.iter_mut().enumerate() {
        let row = &params[k * N_BINS..(k + 1) * N_BINS];
        *zk = params[N_CLASSES * N_BINS + k]
            + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
    }
    z
}

/// Penalty value on the weights (never the biases).
fn penalty_term(params: &[f64], penalty: Penalty, inv_c: f64) -> f64 {
    let weights = &params[..N_CLASSES * N_BINS];
    match penalty {
        Penalty::L1 => inv_c * weights.iter().map(|w| w.abs()).sum::<f64>(),
        Penalty::L2 => 0.5 * inv_c * weights.iter().map(|w| w * w).sum::<f64>(),
        Penalty::None => 0.0,
    }
}

/// Proximal step on the penalized weights after a gradient move: exact
/// soft-threshold for L1, exact shrinkage for L2. Keeping the penalty in
/// the prox (not the smooth gradient) keeps the line search conditioned at
/// extreme regularization strengths. Biases move by plain gradient descent.
fn prox_step(params: &[f64], grad: &[f64], step: f64, penalty: Penalty, inv_c: f64) -> Vec<f64> {
    params
        .iter()
        .zip(grad)
        .enumerate()
        .map(|(i, (&p, &g))| {
            let moved = p - step * g;
            if i >= N_CLASSES * N_BINS {
                return moved;
            }
            match penalty {
                Penalty::L1 => {
                    let threshold = step * inv_c;
                    moved.signum() * (moved.abs() - threshold).max(0.0)
                }
                Penalty::L2 => moved / (1.0 + step * inv_c),
                Penalty::None => moved,
            }
        })
        .collect()
}

/// Fit by deterministic full-batch proximal gradient descent from zero
/// initialization, with backtracking line search, until the proximal
/// gradient max-norm drops below `tol` or `max_iter` is reached. The
/// objective trace is non-increasing.
pub fn train_logreg(
    x: &[FeatureRow],
    y: &[Density],
    cfg: &LogRegConfig,
) -> Result<(LogRegModel, FitTrace), TrainError> {
    validate_training(x, y)?;

    let inv_c = match cfg.penalty {
        Penalty::None => 0.0,
        _ => 1.0 / cfg.c,
    };

    let mut params = vec![0.0; N_PARAMS];
    let mut step = 1.0 / x.len() as f64;
    let mut smooth = smooth_objective(x, y, &params, 0.0);
    let mut objective = Vec::new();
    objective.push(smooth + penalty_term(&params, cfg.penalty, inv_c));

    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..cfg.max_iter {
        iterations += 1;
        let grad = smooth_gradient(x, y, &params, 0.0);

        // backtracking on the quadratic upper bound of the smooth part
        step *= 1.5;
        let (candidate, candidate_smooth) = loop {
            let candidate = prox_step(&params, &grad, step, cfg.penalty, inv_c);
            let candidate_smooth = smooth_objective(x, y, &candidate, 0.0);
            let mut linear = 0.0;
            let mut quad = 0.0;
            for ((c, p), g) in candidate.iter().zip(&params).zip(&grad) {
                let d = c - p;
                linear += g * d;
                quad += d * d;
            }
            if candidate_smooth <= smooth + linear + quad / (2.0 * step) + 1e-12 {
                break (candidate, candidate_smooth);
            }
            step *= 0.5;
            if step < 1e-18 {
                break (params.clone(), smooth);
            }
        };

        // proximal-gradient residual; reduces to the plain gradient
        // max-norm when there is no L1 term
        let residual = params
            .iter()
            .zip(&candidate)
            .map(|(p, c)| (p - c).abs() / step)
            .fold(0.0, f64::max);

        params = candidate;
        smooth = candidate_smooth;
        objective.push(smooth + penalty_term(&params, cfg.penalty, inv_c));

        if residual < cfg.tol {
            converged = true;
            break;
        }
    }

    let mut weights = [[0.0; N_BINS]; N_CLASSES];
    for (k, row) in weights.iter_mut().enumerate() {
        row.copy_from_slice(&params[k * N_BINS..(k + 1) * N_BINS]);
    }
    let mut bias = [0.0; N_CLASSES];
    bias.copy_from_slice(&params[N_CLASSES * N_BINS..]);

    Ok((
        LogRegModel {
            weights,
            bias,
            config: *cfg,
        },
        FitTrace {
            objective,
            iterations,
            converged,
        },
    ))
}
