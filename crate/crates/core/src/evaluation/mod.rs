//! Aggregation of per-image predictions to the patient level and the
//! evaluation statistics reported on them: per-class and micro-averaged
//! one-vs-rest AUROC with DeLong confidence intervals, the dense/non-dense
//! dichotomy, and Kendall tau-b agreement with clinical density.

pub mod auc;
pub mod delong;
pub mod kendall;

pub use auc::{auroc, micro_ovr_auroc, pool_ovr_pairs, roc_points, RocPoint};
pub use delong::{delong_ci, DelongCi};
pub use kendall::kendall_tau_b;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::density::{Density, DensityDistribution, DENSITY_CLASSES};

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("empty input")]
    EmptyInput,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("scores must be finite")]
    NonFiniteScore,
    #[error("degenerate labels: need both classes present")]
    DegenerateLabels,
    #[error("need at least 2 per class for a confidence interval, got {positives} positives / {negatives} negatives")]
    TooFewPerClass { positives: usize, negatives: usize },
    #[error("rank correlation undefined: a variable is entirely tied")]
    AllTied,
    #[error("patient {0} has no ground-truth density")]
    MissingTruth(String),
    #[error("invalid probability row for image {0}")]
    BadDistribution(String),
}

/// Component-wise arithmetic mean of one patient's per-image distributions.
pub fn aggregate_mean(dists: &[DensityDistribution]) -> Result<DensityDistribution, EvalError> {
    if dists.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut acc = [0.0; 4];
    for d in dists {
        for (a, p) in acc.iter_mut().zip(d.probabilities()) {
            *a += p;
        }
    }
    let n = dists.len() as f64;
    for a in acc.iter_mut() {
        *a /= n;
    }
    DensityDistribution::new(acc).map_err(|_| EvalError::EmptyInput)
}

/// Majority-style aggregation: take each image's most probable class
/// (A=0..D=3, ties toward the lower index), average the codes, round half
/// away from zero, clamp to [0, 3].
pub fn aggregate_vote_round(dists: &[DensityDistribution]) -> Result<Density, EvalError> {
    if dists.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let total: f64 = dists.iter().map(|d| d.argmax().index() as f64).sum();
    let code = (total / dists.len() as f64).round().clamp(0.0, 3.0);
    Ok(Density::from_index(code as usize).unwrap())
}

/// One per-image prediction row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub image_id: String,
    pub patient_id: String,
    pub dist: DensityDistribution,
}

/// Per-image predictions plus the per-patient ground truth and optional
/// subgroup tags (tag name -> patient -> value).
#[derive(Debug, Clone)]
pub struct PredictionSet {
    rows: Vec<PredictionRow>,
    truth: BTreeMap<String, Density>,
    tags: BTreeMap<String, BTreeMap<String, String>>,
}

impl PredictionSet {
    /// Every row's patient must have a ground-truth density.
    pub fn new(
        rows: Vec<PredictionRow>,
        truth: BTreeMap<String, Density>,
    ) -> Result<Self, EvalError> {
        for row in &rows {
            if !truth.contains_key(&row.patient_id) {
                return Err(EvalError::MissingTruth(row.patient_id.clone()));
            }
        }
        Ok(PredictionSet {
            rows,
            truth,
            tags: BTreeMap::new(),
        })
    }

    pub fn add_tag(&mut self, name: &str, values: BTreeMap<String, String>) {
        self.tags.insert(name.to_string(), values);
    }

    pub fn rows(&self) -> &[PredictionRow] {
        &self.rows
    }

    pub fn truth(&self, patient_id: &str) -> Option<Density> {
        self.truth.get(patient_id).copied()
    }
}

/// Evaluation level: each image is an instance, or each patient after
/// mean-aggregation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalLevel {
    Image,
    Patient,
}

impl std::fmt::Display for EvalLevel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EvalLevel::Image => "image",
            EvalLevel::Patient => "patient",
        })
    }
}

/// AUROC point estimate with an optional confidence interval (absent when
/// fewer than two observations of a class exist).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricCell {
    pub auc: f64,
    pub ci: Option<(f64, f64)>,
}

/// All statistics for one evaluated population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricBlock {
    pub n_instances: usize,
    pub n_patients: usize,
    /// Micro-averaged one-vs-rest AUROC over the pooled pairs.
    pub micro: Option<MetricCell>,
    /// One-vs-rest AUROC per density class, indexed A..D.
    pub per_class: [Option<MetricCell>; 4],
    /// Dense (C, D) vs non-dense (A, B) with score p(C) + p(D).
    pub dichotomized: Option<MetricCell>,
    /// Kendall tau-b between vote-rounded patient predictions and clinical
    /// density.
    pub tau_b: Option<f64>,
}

/// Full evaluation output, overall and per subgroup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub level: EvalLevel,
    pub alpha: f64,
    pub overall: MetricBlock,
    /// tag name -> tag value -> metrics
    pub subgroups: BTreeMap<String, BTreeMap<String, MetricBlock>>,
}

/// Evaluate a prediction set at the requested level, overall and for each
/// requested subgroup tag. Subgroups with fewer than two ground-truth
/// classes come back with empty (not-estimable) cells; a degenerate overall
/// population is an error.
pub fn evaluate(
    preds: &PredictionSet,
    level: EvalLevel,
    subgroup_tags: &[String],
) -> Result<EvalReport, EvalError> {
    if preds.rows.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let all: Vec<&PredictionRow> = preds.rows.iter().collect();
    let overall = metric_block(&all, &preds.truth, level)?;
    if overall.micro.is_none() {
        return Err(EvalError::DegenerateLabels);
    }

    let mut subgroups = BTreeMap::new();
    for tag in subgroup_tags {
        let Some(values) = preds.tags.get(tag) else {
            continue;
        };
        let mut partitions: BTreeMap<String, Vec<&PredictionRow>> = BTreeMap::new();
        for row in &preds.rows {
            if let Some(v) = values.get(&row.patient_id) {
                partitions.entry(v.clone()).or_default().push(row);
            }
        }
        let mut blocks = BTreeMap::new();
        for (value, rows) in partitions {
            blocks.insert(value, metric_block(&rows, &preds.truth, level)?);
        }
        subgroups.insert(tag.clone(), blocks);
    }

    Ok(EvalReport {
        level,
        alpha: 0.05,
        overall,
        subgroups,
    })
}

fn metric_block(
    rows: &[&PredictionRow],
    truth: &BTreeMap<String, Density>,
    level: EvalLevel,
) -> Result<MetricBlock, EvalError> {
    // group rows by patient for aggregation and tau-b
    let mut by_patient: BTreeMap<&str, Vec<DensityDistribution>> = BTreeMap::new();
    for row in rows {
        by_patient.entry(row.patient_id.as_str()).or_default().push(row.dist);
    }

    // instances at the requested level
    let (probs, truths): (Vec<[f64; 4]>, Vec<Density>) = match level {
        EvalLevel::Image => rows
            .iter()
            .map(|r| (r.dist.probabilities(), truth[&r.patient_id]))
            .unzip(),
        EvalLevel::Patient => by_patient
            .iter()
            .map(|(pid, dists)| {
                let mean = aggregate_mean(dists).expect("patient group is non-empty");
                (mean.probabilities(), truth[*pid])
            })
            .unzip(),
    };

    // micro-averaging needs at least two ground-truth classes; the pooled
    // pairs alone would hide single-class degeneracy
    let mut seen = [false; 4];
    for t in &truths {
        seen[t.index()] = true;
    }
    let micro = if seen.iter().filter(|&&s| s).count() >= 2 {
        let (scores, labels) = pool_ovr_pairs(&probs, &truths);
        cell(&scores, &labels)
    } else {
        None
    };

    let mut per_class = [None; 4];
    for class in DENSITY_CLASSES {
        let scores: Vec<f64> = probs.iter().map(|p| p[class.index()]).collect();
        let labels: Vec<bool> = truths.iter().map(|&t| t == class).collect();
        per_class[class.index()] = cell(&scores, &labels);
    }

    let dichotomized = {
        let scores: Vec<f64> = probs.iter().map(|p| p[2] + p[3]).collect();
        let labels: Vec<bool> = truths.iter().map(|t| t.is_dense()).collect();
        cell(&scores, &labels)
    };

    let tau_b = {
        let mut votes = Vec::with_capacity(by_patient.len());
        let mut clinical = Vec::with_capacity(by_patient.len());
        for (pid, dists) in &by_patient {
            votes.push(aggregate_vote_round(dists).expect("non-empty") .index() as f64);
            clinical.push(truth[*pid].index() as f64);
        }
        kendall_tau_b(&votes, &clinical).ok()
    };

    Ok(MetricBlock {
        n_instances: probs.len(),
        n_patients: by_patient.len(),
        micro,
        per_class,
        dichotomized,
        tau_b,
    })
}

/// AUROC cell: point estimate whenever both classes are present, interval
/// when DeLong's preconditions hold as well.
fn cell(scores: &[f64], labels: &[bool]) -> Option<MetricCell> {
    let auc = auroc(scores, labels).ok()?;
    let ci = delong_ci(scores, labels, 0.05).ok().map(|d| (d.lower, d.upper));
    Some(MetricCell { auc, ci })
}
