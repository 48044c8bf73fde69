//! One-hidden-layer MLP (16 -> hidden ReLU -> 4 softmax) trained with Adam
//! on mini-batches, constant learning rate, and early stopping on
//! validation loss with the best-validation snapshot returned.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    distribution_from, log_sum_exp4, softmax4, validate_training, DensityClassifier, FeatureRow,
    TrainError,
};
use crate::density::{Density, DensityDistribution};
use crate::features::N_BINS;
use crate::stats::derive_seed;

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub hidden: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Stop after this many epochs without validation-loss improvement.
    pub patience: usize,
    pub max_epochs: usize,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            hidden: 512,
            learning_rate: 1e-4,
            batch_size: 64,
            patience: 25,
            max_epochs: 500,
            seed: 0,
        }
    }
}

impl MlpConfig {
    pub fn n_params(&self) -> usize {
        self.hidden * N_BINS + self.hidden + 4 * self.hidden + 4
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub config: MlpConfig,
    /// Flat parameters: w1 (hidden x 16), b1, w2 (4 x hidden), b2.
    pub params: Vec<f64>,
}

impl DensityClassifier for MlpModel {
    fn predict_proba(&self, x: &FeatureRow) -> DensityDistribution {
        let (logits, _) = forward(&self.params, self.config.hidden, x);
        distribution_from(softmax4(logits))
    }
}

/// Per-epoch loss curves and the early-stopping outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpTrace {
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    pub best_epoch: usize,
    pub stopped_early: bool,
}

fn param_offsets(hidden: usize) -> (usize, usize, usize) {
    let b1 = hidden * N_BINS;
    let w2 = b1 + hidden;
    let b2 = w2 + 4 * hidden;
    (b1, w2, b2)
}

/// Forward pass returning logits and hidden activations.
fn forward(params: &[f64], hidden: usize, x: &FeatureRow) -> ([f64; 4], Vec<f64>) {
    let (b1_off, w2_off, b2_off) = param_offsets(hidden);
    let mut a1 = vec![0.0; hidden];
    for h in 0..hidden {
        let row = &params[h * N_BINS..(h + 1) * N_BINS];
        let pre = params[b1_off + h] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        a1[h] = pre.max(0.0);
    }
    let mut logits = [0.0; 4];
    for k in 0..4 {
        let row = &params[w2_off + k * hidden..w2_off + (k + 1) * hidden];
        logits[k] = params[b2_off + k] + row.iter().zip(&a1).map(|(w, a)| w * a).sum::<f64>();
    }
    (logits, a1)
}

/// Mean cross-entropy of the given rows.
pub fn mlp_loss(params: &[f64], hidden: usize, x: &[FeatureRow], y: &[Density]) -> f64 {
    let mut loss = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        let (logits, _) = forward(params, hidden, xi);
        loss += log_sum_exp4(logits) - logits[yi.index()];
    }
    loss / x.len() as f64
}

/// Analytic gradient of [`mlp_loss`].
pub fn mlp_gradient(params: &[f64], hidden: usize, x: &[FeatureRow], y: &[Density]) -> Vec<f64> {
    let (b1_off, w2_off, b2_off) = param_offsets(hidden);
    let mut grad = vec![0.0; params.len()];
    let scale = 1.0 / x.len() as f64;

    for (xi, yi) in x.iter().zip(y) {
        let (logits, a1) = forward(params, hidden, xi);
        let p = softmax4(logits);
        let mut dz2 = [0.0; 4];
        for k in 0..4 {
            dz2[k] = (p[k] - if yi.index() == k { 1.0 } else { 0.0 }) * scale;
        }
        for k in 0..4 {
            let row = &mut grad[w2_off + k * hidden..w2_off + (k + 1) * hidden];
            for (g, a) in row.iter_mut().zip(&a1) {
                *g += dz2[k] * a;
            }
            grad[b2_off + k] += dz2[k];
        }
        for h in 0..hidden {
            if a1[h] <= 0.0 {
                continue; // ReLU gate closed
            }
            let da1: f64 = (0..4).map(|k| dz2[k] * params[w2_off + k * hidden + h]).sum();
            let row = &mut grad[h * N_BINS..(h + 1) * N_BINS];
            for (g, v) in row.iter_mut().zip(xi) {
                *g += da1 * v;
            }
            grad[b1_off + h] += da1;
        }
    }
    grad
}

/// Glorot-uniform input layer, zero output layer. The zero output layer
/// keeps training exactly equivariant under class relabeling.
fn init_params(cfg: &MlpConfig) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 0x11f));
    let mut params = vec![0.0; cfg.n_params()];
    let limit = (6.0 / (N_BINS + cfg.hidden) as f64).sqrt();
    for w in params[..cfg.hidden * N_BINS].iter_mut() {
        *w = rng.gen_range(-limit..limit);
    }
    params
}

/// Train with Adam and early stopping; returns the parameters from the
/// best-validation-loss epoch. Deterministic given the config seed.
pub fn train_mlp(
    x: &[FeatureRow],
    y: &[Density],
    x_val: &[FeatureRow],
    y_val: &[Density],
    cfg: &MlpConfig,
) -> Result<(MlpModel, MlpTrace), TrainError> {
    validate_training(x, y)?;
    if x_val.is_empty() || x_val.len() != y_val.len() {
        return Err(TrainError::EmptyValidation);
    }
    if x_val.iter().flatten().any(|v| !v.is_finite()) {
        return Err(TrainError::NonFiniteFeature);
    }

    let mut params = init_params(cfg);
    let mut adam_m = vec![0.0; params.len()];
    let mut adam_v = vec![0.0; params.len()];
    let mut adam_t = 0u64;

    let mut trace = MlpTrace {
        train_loss: Vec::new(),
        val_loss: Vec::new(),
        best_epoch: 0,
        stopped_early: false,
    };
    let mut best_params = params.clone();
    let mut best_val = f64::INFINITY;
    let mut stale_epochs = 0;

    for epoch in 0..cfg.max_epochs {
        let mut order: Vec<usize> = (0..x.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, epoch as u64 + 1));
        order.shuffle(&mut rng);

        for batch in order.chunks(cfg.batch_size.max(1)) {
            let bx: Vec<FeatureRow> = batch.iter().map(|&i| x[i]).collect();
            let by: Vec<Density> = batch.iter().map(|&i| y[i]).collect();
            let grad = mlp_gradient(&params, cfg.hidden, &bx, &by);

            adam_t += 1;
            let bias1 = 1.0 - ADAM_BETA1.powi(adam_t as i32);
            let bias2 = 1.0 - ADAM_BETA2.powi(adam_t as i32);
            for i in 0..params.len() {
                adam_m[i] = ADAM_BETA1 * adam_m[i] + (1.0 - ADAM_BETA1) * grad[i];
                adam_v[i] = ADAM_BETA2 * adam_v[i] + (1.0 - ADAM_BETA2) * grad[i] * grad[i];
                let m_hat = adam_m[i] / bias1;
                let v_hat = adam_v[i] / bias2;
                params[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + ADAM_EPS);
            }
        }

        trace.train_loss.push(mlp_loss(&params, cfg.hidden, x, y));
        let val = mlp_loss(&params, cfg.hidden, x_val, y_val);
        trace.val_loss.push(val);

        if val < best_val {
            best_val = val;
            best_params.copy_from_slice(&params);
            trace.best_epoch = epoch;
            stale_epochs = 0;
        } else {
            stale_epochs += 1;
            if stale_epochs >= cfg.patience {
                trace.stopped_early = true;
                break;
            }
        }
    }

    Ok((
        MlpModel {
            config: *cfg,
            params: best_params,
        },
        trace,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use busdensity_oracles::numerical_gradient;

    fn toy(n_per: usize, seed: u64) -> (Vec<FeatureRow>, Vec<Density>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for class in 0..4usize {
            for _ in 0..n_per {
                let mut row: FeatureRow = std::array::from_fn(|_| rng.gen::<f64>() * 0.05);
                row[class * 4] = 0.7 + rng.gen::<f64>() * 0.1;
                x.push(row);
                y.push(Density::from_index(class).unwrap());
            }
        }
        (x, y)
    }

    fn small_cfg() -> MlpConfig {
        MlpConfig {
            hidden: 16,
            learning_rate: 1e-2,
            max_epochs: 150,
            seed: 3,
            ..Default::default()
        }
    }

    #[test]
    fn separable_reaches_full_validation_accuracy() {
        let (x, y) = toy(20, 1);
        let (xv, yv) = toy(6, 2);
        let (model, trace) = train_mlp(&x, &y, &xv, &yv, &small_cfg()).unwrap();
        let correct = xv
            .iter()
            .zip(&yv)
            .filter(|(xi, yi)| model.predict(xi) == **yi)
            .count();
        assert_eq!(correct, xv.len(), "trace: best epoch {}", trace.best_epoch);
        assert!(trace.best_epoch < small_cfg().max_epochs);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let hidden = 8;
        let cfg = MlpConfig {
            hidden,
            seed: 17,
            ..Default::default()
        };
        for _ in 0..5 {
            let x: Vec<FeatureRow> = (0..4)
                .map(|_| std::array::from_fn(|_| rng.gen::<f64>()))
                .collect();
            let y: Vec<Density> = (0..4)
                .map(|_| Density::from_index(rng.gen_range(0..4)).unwrap())
                .collect();
            let mut params = init_params(&cfg);
            // random output layer so hidden gradients actually flow
            for p in params.iter_mut() {
                if *p == 0.0 {
                    *p = rng.gen_range(-0.5..0.5);
                }
            }
            let analytic = mlp_gradient(&params, hidden, &x, &y);
            let numeric = numerical_gradient(|p| mlp_loss(p, hidden, &x, &y), &params, 1e-6);
            let scale = analytic
                .iter()
                .chain(numeric.iter())
                .fold(0.0f64, |m, v| m.max(v.abs()));
            let max_err = analytic
                .iter()
                .zip(&numeric)
                .map(|(a, n)| (a - n).abs())
                .fold(0.0, f64::max);
            assert!(max_err / scale.max(1.0) < 1e-4, "rel err {}", max_err / scale);
        }
    }

    #[test]
    fn identical_seed_reproduces_loss_curve() {
        let (x, y) = toy(10, 4);
        let (xv, yv) = toy(3, 5);
        let cfg = MlpConfig {
            max_epochs: 30,
            ..small_cfg()
        };
        let (_, a) = train_mlp(&x, &y, &xv, &yv, &cfg).unwrap();
        let (_, b) = train_mlp(&x, &y, &xv, &yv, &cfg).unwrap();
        assert_eq!(a.train_loss, b.train_loss);
        assert_eq!(a.val_loss, b.val_loss);
    }

    #[test]
    fn early_stopping_returns_best_snapshot() {
        let (x, y) = toy(10, 6);
        let (xv, yv) = toy(3, 7);
        let cfg = MlpConfig {
            patience: 5,
            max_epochs: 400,
            ..small_cfg()
        };
        let (model, trace) = train_mlp(&x, &y, &xv, &yv, &cfg).unwrap();
        let best = trace.val_loss[trace.best_epoch];
        let returned = mlp_loss(&model.params, cfg.hidden, &xv, &yv);
        assert!((returned - best).abs() < 1e-12);
        assert!(trace
            .val_loss
            .iter()
            .all(|&v| v >= best - 1e-15));
    }

    #[test]
    fn empty_validation_rejected() {
        let (x, y) = toy(4, 8);
        assert_eq!(
            train_mlp(&x, &y, &[], &[], &small_cfg()).unwrap_err(),
            TrainError::EmptyValidation
        );
    }

    #[test]
    fn probabilities_sum_to_one() {
        let (x, y) = toy(6, 9);
        let (xv, yv) = toy(2, 10);
        let cfg = MlpConfig {
            max_epochs: 20,
            ..small_cfg()
        };
        let (model, _) = train_mlp(&x, &y, &xv, &yv, &cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let probe: FeatureRow = std::array::from_fn(|_| rng.gen());
            let p = model.predict_proba(&probe).probabilities();
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn label_permutation_permutes_predictions() {
        let (x, y) = toy(8, 12);
        let (xv, yv) = toy(2, 13);
        let cfg = MlpConfig {
            max_epochs: 25,
            ..small_cfg()
        };
        let (base, _) = train_mlp(&x, &y, &xv, &yv, &cfg).unwrap();

        let swap = |d: Density| match d {
            Density::A => Density::D,
            Density::D => Density::A,
            other => other,
        };
        let ys: Vec<Density> = y.iter().map(|&l| swap(l)).collect();
        let yvs: Vec<Density> = yv.iter().map(|&l| swap(l)).collect();
        let (perm, _) = train_mlp(&x, &ys, &xv, &yvs, &cfg).unwrap();

        for xi in x.iter().take(5) {
            let p0 = base.predict_proba(xi).probabilities();
            let p1 = perm.predict_proba(xi).probabilities();
            assert!((p0[0] - p1[3]).abs() < 1e-12);
            assert!((p0[3] - p1[0]).abs() < 1e-12);
            assert!((p0[1] - p1[1]).abs() < 1e-12);
        }
    }
}
