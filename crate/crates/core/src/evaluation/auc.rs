//! Rank-based AUROC: the Mann-Whitney statistic with midrank tie handling,
//! pooled micro-averaged one-vs-rest AUROC, and ROC curve points.

use super::EvalError;
use crate::density::Density;

/// 1-based ranks with ties assigned the average (mid) rank.
pub(crate) fn midranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // run [i, j] shares rank (i+1 + j+1)/2
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = rank;
        }
        i = j + 1;
    }
    ranks
}

fn validate_scores(scores: &[f64], labels: &[bool]) -> Result<(usize, usize), EvalError> {
    if scores.len() != labels.len() {
        return Err(EvalError::LengthMismatch {
            left: scores.len(),
            right: labels.len(),
        });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(EvalError::NonFiniteScore);
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(EvalError::DegenerateLabels);
    }
    Ok((n_pos, n_neg))
}

/// Binary AUROC as the normalized Mann-Whitney U statistic, ties counted
/// one half. Equals the probability that a random positive outscores a
/// random negative. O(n log n).
pub fn auroc(scores: &[f64], labels: &[bool]) -> Result<f64, EvalError> {
    let (n_pos, n_neg) = validate_scores(scores, labels)?;
    let ranks = midranks(scores);
    let rank_sum_pos: f64 = ranks
        .iter()
        .zip(labels)
        .filter(|(_, &l)| l)
        .map(|(&r, _)| r)
        .sum();
    let m = n_pos as f64;
    let u = rank_sum_pos - m * (m + 1.0) / 2.0;
    Ok(u / (m * n_neg as f64))
}

/// Micro-averaged one-vs-rest AUROC: every (instance, class) pair
/// contributes one (score, indicator) row to a single pooled binary AUROC,
/// weighting all instances equally.
pub fn micro_ovr_auroc(probs: &[[f64; 4]], truth: &[Density]) -> Result<f64, EvalError> {
    if probs.len() != truth.len() {
        return Err(EvalError::LengthMismatch {
            left: probs.len(),
            right: truth.len(),
        });
    }
    if probs.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut seen = [false; 4];
    for t in truth {
        seen[t.index()] = true;
    }
    if seen.iter().filter(|&&s| s).count() < 2 {
        return Err(EvalError::DegenerateLabels);
    }
    let (scores, labels) = pool_ovr_pairs(probs, truth);
    auroc(&scores, &labels)
}

/// The pooled one-vs-rest (score, indicator) pairs behind micro-averaging.
pub fn pool_ovr_pairs(probs: &[[f64; 4]], truth: &[Density]) -> (Vec<f64>, Vec<bool>) {
    let mut scores = Vec::with_capacity(4 * probs.len());
    let mut labels = Vec::with_capacity(4 * probs.len());
    for (p, t) in probs.iter().zip(truth) {
        for (k, &pk) in p.iter().enumerate() {
            scores.push(pk);
            labels.push(t.index() == k);
        }
    }
    (scores, labels)
}

/// One ROC operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

/// ROC curve points from (0,0) to (1,1), one per distinct score, suitable
/// for external plotting.
pub fn roc_points(scores: &[f64], labels: &[bool]) -> Result<Vec<RocPoint>, EvalError> {
    let (n_pos, n_neg) = validate_scores(scores, labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());

    let mut points = vec![RocPoint {
        threshold: f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0,
    }];
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        while i < order.len() && scores[order[i]] == threshold {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            threshold,
            fpr: fp as f64 / n_neg as f64,
            tpr: tp as f64 / n_pos as f64,
        });
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use busdensity_oracles::{brute_auc, brute_micro_ovr_auc};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn perfect_separation() {
        assert_eq!(auroc(&[0.9, 0.1], &[true, false]).unwrap(), 1.0);
    }

    #[test]
    fn all_ties_give_half() {
        let scores = [0.4; 6];
        let labels = [true, false, true, false, true, false];
        assert_eq!(auroc(&scores, &labels).unwrap(), 0.5);
    }

    #[test]
    fn hand_enumerated_value() {
        // positives {0.4, 0.8} vs negatives {0.2, 0.4}: 3 wins + 1 tie of 4 pairs
        let auc = auroc(&[0.2, 0.4, 0.4, 0.8], &[false, true, false, true]).unwrap();
        assert_eq!(auc, 0.875);
    }

    #[test]
    fn single_class_rejected() {
        assert!(matches!(
            auroc(&[0.1, 0.2], &[true, true]),
            Err(EvalError::DegenerateLabels)
        ));
    }

    #[test]
    fn matches_pairwise_reference_on_random_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let n = rng.gen_range(5..200);
            // coarse grid forces plenty of ties
            let scores: Vec<f64> = (0..n).map(|_| rng.gen_range(0..10) as f64 / 10.0).collect();
            let mut labels: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.4)).collect();
            labels[0] = true;
            labels[1] = false;
            let fast = auroc(&scores, &labels).unwrap();
            let slow = brute_auc(&scores, &labels);
            assert_eq!(fast, slow);
        }
    }

    #[test]
    fn complement_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let n = rng.gen_range(4..100);
            let scores: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
            let mut labels: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
            labels[0] = true;
            labels[1] = false;
            let a = auroc(&scores, &labels).unwrap();
            let flipped: Vec<bool> = labels.iter().map(|&l| !l).collect();
            let b = auroc(&scores, &flipped).unwrap();
            assert!((a + b - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rank_invariance_under_monotone_transform() {
        let scores = [0.1, 0.5, 0.2, 0.9, 0.9, 0.3];
        let labels = [false, true, false, true, false, true];
        let a = auroc(&scores, &labels).unwrap();
        let transformed: Vec<f64> = scores.iter().map(|&s| (3.0 * s).exp()).collect();
        let b = auroc(&transformed, &labels).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn micro_one_hot_correct_is_one() {
        let truth = [Density::A, Density::B, Density::C, Density::D];
        let probs: Vec<[f64; 4]> = truth
            .iter()
            .map(|t| {
                let mut p = [0.0; 4];
                p[t.index()] = 1.0;
                p
            })
            .collect();
        assert_eq!(micro_ovr_auroc(&probs, &truth).unwrap(), 1.0);
    }

    #[test]
    fn micro_uniform_is_half() {
        let truth = [Density::A, Density::C, Density::D, Density::B, Density::B];
        let probs = vec![[0.25; 4]; truth.len()];
        assert_eq!(micro_ovr_auroc(&probs, &truth).unwrap(), 0.5);
    }

    #[test]
    fn micro_matches_pooled_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let n = rng.gen_range(4..60);
            let mut probs = Vec::with_capacity(n);
            let mut truth = Vec::with_capacity(n);
            for _ in 0..n {
                let raw: [f64; 4] = [rng.gen(), rng.gen(), rng.gen(), rng.gen()];
                let sum: f64 = raw.iter().sum();
                probs.push([raw[0] / sum, raw[1] / sum, raw[2] / sum, raw[3] / sum]);
                truth.push(Density::from_index(rng.gen_range(0..4)).unwrap());
            }
            truth[0] = Density::A;
            truth[1] = Density::B;
            let fast = micro_ovr_auroc(&probs, &truth).unwrap();
            let t_idx: Vec<usize> = truth.iter().map(|t| t.index()).collect();
            let slow = brute_micro_ovr_auc(&probs, &t_idx);
            assert_eq!(fast, slow);
        }
    }

    #[test]
    fn roc_points_start_and_end() {
        let pts = roc_points(&[0.9, 0.8, 0.3, 0.1], &[true, false, true, false]).unwrap();
        assert_eq!(pts.first().unwrap().fpr, 0.0);
        assert_eq!(pts.first().unwrap().tpr, 0.0);
        assert_eq!(pts.last().unwrap().fpr, 1.0);
        assert_eq!(pts.last().unwrap().tpr, 1.0);
        // monotone non-decreasing in both axes
        for w in pts.windows(2) {
            assert!(w[1].fpr >= w[0].fpr && w[1].tpr >= w[0].tpr);
        }
    }
}
