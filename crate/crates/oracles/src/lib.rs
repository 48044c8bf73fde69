//! Brute-force reference implementations used as independent test oracles.
//!
//! Everything here is written the slow, obvious way (pair enumeration,
//! central finite differences) on purpose: these functions check the fast
//! production implementations and must not share code with them. This crate
//! is only ever a dev-dependency.

/// Pairwise win/tie/loss kernel: 1 if the positive outscores the negative,
/// 1/2 on an exact tie, 0 otherwise.
fn psi(pos: f64, neg: f64) -> f64 {
    if pos > neg {
        1.0
    } else if pos == neg {
        0.5
    } else {
        0.0
    }
}

/// AUC by direct enumeration of all positive-negative pairs.
///
/// Panics if either class is absent; the caller is a test.
pub fn brute_auc(scores: &[f64], labels: &[bool]) -> f64 {
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
    assert!(!pos.is_empty() && !neg.is_empty(), "need both classes");
    let mut total = 0.0;
    for &p in &pos {
        for &n in &neg {
            total += psi(p, n);
        }
    }
    total / (pos.len() as f64 * neg.len() as f64)
}

/// AUC variance from the structural components, computed pairwise:
/// V10(i) is the mean of psi over negatives for positive i, V01(j) the mean
/// over positives for negative j, and the variance combines their sample
/// variances. Returns (auc, variance).
pub fn brute_delong(scores: &[f64], labels: &[bool]) -> (f64, f64) {
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
    assert!(m >= 2 && n >= 2, "need at least two of each class");

    let v10: Vec<f64> = pos
        .iter()
        .map(|&p| neg.iter().map(|&q| psi(p, q)).sum::<f64>() / n as f64)
        .collect();
    let v01: Vec<f64> = neg
        .iter()
        .map(|&q| pos.iter().map(|&p| psi(p, q)).sum::<f64>() / m as f64)
        .collect();

    let auc = v10.iter().sum::<f64>() / m as f64;
    let s10 = sample_variance(&v10, auc);
    let s01 = sample_variance(&v01, auc);
    (auc, s10 / m as f64 + s01 / n as f64)
}

fn sample_variance(xs: &[f64], mean: f64) -> f64 {
    let n = xs.len();
    xs.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() / (n as f64 - 1.0)
}

/// Micro-averaged one-vs-rest AUC: pool one (score, indicator) pair per
/// instance per class, then run the pairwise AUC on the pooled set.
pub fn brute_micro_ovr_auc(probs: &[[f64; 4]], truth: &[usize]) -> f64 {
    assert_eq!(probs.len(), truth.len());
    let mut scores = Vec::with_capacity(4 * probs.len());
    let mut labels = Vec::with_capacity(4 * probs.len());
    for (p, &t) in probs.iter().zip(truth) {
        for (k, &pk) in p.iter().enumerate() {
            scores.push(pk);
            labels.push(t == k);
        }
    }
    brute_auc(&scores, &labels)
}

/// Kendall tau-b by full pair enumeration with the tie correction:
/// (C - D) / sqrt((n0 - n1)(n0 - n2)). Returns None when either variable
/// is entirely tied.
pub fn brute_tau_b(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    let mut concordant = 0i64;
    let mut discordant = 0i64;
    let mut ties_x = 0i64;
    let mut ties_y = 0i64;
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = x[i].partial_cmp(&x[j]).unwrap();
            let dy = y[i].partial_cmp(&y[j]).unwrap();
            use std::cmp::Ordering::*;
            match (dx, dy) {
                (Equal, Equal) => {
                    ties_x += 1;
                    ties_y += 1;
                }
                (Equal, _) => ties_x += 1,
                (_, Equal) => ties_y += 1,
                (Less, Less) | (Greater, Greater) => concordant += 1,
                _ => discordant += 1,
            }
        }
    }
    let n0 = (n * (n - 1) / 2) as i64;
    let fx = (n0 - ties_x) as f64;
    let fy = (n0 - ties_y) as f64;
    if fx == 0.0 || fy == 0.0 {
        return None;
    }
    Some((concordant - discordant) as f64 / (fx * fy).sqrt())
}

/// Central finite-difference gradient of `f` at `x`.
pub fn numerical_gradient<F: FnMut(&[f64]) -> f64>(mut f: F, x: &[f64], eps: f64) -> Vec<f64> {
    let mut grad = vec![0.0; x.len()];
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        probe[i] = x[i] + eps;
        let hi = f(&probe);
        probe[i] = x[i] - eps;
        let lo = f(&probe);
        probe[i] = x[i];
        grad[i] = (hi - lo) / (2.0 * eps);
    }
    grad
}
