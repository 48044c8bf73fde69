//! File schemas shared by the pipeline stages: every stage reads its
//! predecessors' CSV artifacts and writes its own. The prediction CSV is
//! also the ingestion format for per-image predictions produced by external
//! models. Writers emit rows in deterministic order so identical runs give
//! byte-identical files.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cohort::{
    Cohort, ExclusionReport, MatchedSet, Outcome, Rejection, Split, SplitAssignment,
};
use crate::density::{Density, DensityDistribution};
use crate::evaluation::{EvalReport, MetricBlock, PredictionRow, RocPoint};
use crate::features::{HistogramFeatures, N_BINS};
use crate::imaging::CleaningStatus;
use crate::risk::{OddsRatioRow, RiskAuroc};
use crate::synth::TruthRow;

#[derive(Debug, Error)]
pub enum ArtifactError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(String),
    #[error("schema mismatch in {path}: expected header {expected:?}, got {got:?}")]
    Schema {
        path: String,
        expected: String,
        got: String,
    },
    #[error("bad value at {path} line {line}: {message}")]
    BadValue {
        path: String,
        line: u64,
        message: String,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ArtifactError + '_ {
    move |source| ArtifactError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn open_checked(path: &Path, expected: &[&str]) -> Result<csv::Reader<std::fs::File>, ArtifactError> {
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let headers = reader.headers().map_err(|e| ArtifactError::Csv(e.to_string()))?;
    let got: Vec<&str> = headers.iter().collect();
    if got != expected {
        return Err(ArtifactError::Schema {
            path: path.display().to_string(),
            expected: expected.join(","),
            got: got.join(","),
        });
    }
    Ok(reader)
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>, ArtifactError> {
    let file = std::fs::File::create(path).map_err(io_err(path))?;
    Ok(csv::Writer::from_writer(file))
}

// ---------------------------------------------------------------- manifest

/// Write a cohort manifest in the documented schema. `image_dir` is the
/// directory name recorded for every patient (relative to the manifest),
/// empty when images are not materialized.
pub fn write_manifest(
    cohort: &Cohort,
    image_dir: Option<&str>,
    path: &Path,
) -> Result<(), ArtifactError> {
    let mut w = writer(path)?;
    w.write_record(crate::cohort::MANIFEST_HEADER)
        .map_err(|e| ArtifactError::Csv(e.to_string()))?;
    for r in cohort.records() {
        w.write_record(&[
            r.patient_id.clone(),
            r.birth_year.to_string(),
            r.mammogram_date.format("%Y-%m-%d").to_string(),
            r.bus_date.format("%Y-%m-%d").to_string(),
            r.clinical_density.to_string(),
            r.bus_birads.to_string(),
            (r.negative_screen as u8).to_string(),
            (r.four_views as u8).to_string(),
            (r.prior_cancer as u8).to_string(),
            r.diagnosis_date
                .map(|d| d.format("%Y-%m-%d").to_string())
                .unwrap_or_default(),
            image_dir.unwrap_or_default().to_string(),
        ])
        .map_err(|e| ArtifactError::Csv(e.to_string()))?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

// ---------------------------------------------------------------- features

pub const FEATURE_HEADER_PREFIX: [&str; 3] = ["image_id", "patient_id", "normalized_input"];

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRecord {
    pub image_id: String,
    pub patient_id: String,
    pub features: HistogramFeatures,
}

fn feature_header() -> Vec<String> {
    let mut header: Vec<String> = FEATURE_HEADER_PREFIX.iter().map(|s| s.to_string()).collect();
    for k in 0..N_BINS {
        header.push(format!("b{k}"));
    }
    header
}

pub fn write_features(rows: &[FeatureRecord], path: &Path) -> Result<(), ArtifactError> {
    let mut w = writer(path)?;
    w.write_record(feature_header())
        .map_err(|e| ArtifactError::Csv(e.to_string()))?;
    for r in rows {
        let mut record = vec![
            r.image_id.clone(),
            r.patient_id.clone(),
            (r.features.normalized_input as u8).to_string(),
        ];
        record.extend(r.features.bins.iter().map(|b| format!("{b}")));
        w.write_record(&record).map_err(|e| ArtifactError::Csv(e.to_string()))?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

pub fn read_features(path: &Path) -> Result<Vec<FeatureRecord>, ArtifactError> {
    let header = feature_header();
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let mut reader = open_checked(path, &header_refs)?;
    let mut rows = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let line = idx as u64 + 2;
        let record = record.map_err(|e| ArtifactError::Csv(e.to_string()))?;
        let bad = |message: String| ArtifactError::BadValue {
            path: path.display().to_string(),
            line,
            message,
        };
        let normalized_input = match record.get(2) {
            Some("0") => false,
            Some("1") => true,
            other => return Err(bad(format!("normalized_input {other:?}"))),
        };
        let mut bins = [0.0; N_BINS];
        for (k, b) in bins.iter_mut().enumerate() {
            let raw = record.get(3 + k).unwrap_or("");
            *b = raw.parse().map_err(|_| bad(format!("bin b{k} = {raw:?}")))?;
        }
        rows.push(FeatureRecord {
            image_id: record.get(0).unwrap_or("").to_string(),
            patient_id: record.get(1).unwrap_or("").to_string(),
            features: HistogramFeatures {
                bins,
                normalized_input,
            },
        });
    }
    Ok(rows)
}

// ------------------------------------------------------------- predictions

pub const PREDICTION_HEADER: [&str; 6] = ["image_id", "patient_id", "pA", "pB", "pC", "pD"];
/// Ingested rows may carry rounding from external tools; sums within this
/// tolerance are renormalized, anything further off is rejected.
pub const PREDICTION_SUM_TOLERANCE: f64 = 1e-6;

pub fn write_predictions(rows: &[PredictionRow], path: &Path) -> Result<(), ArtifactError> {
    let mut w = writer(path)?;
    w.write_record(PREDICTION_HEADER)
        .map_err(|e| ArtifactError::Csv(e.to_string()))?;
    for r in rows {
        let p = r.dist.probabilities();
        w.write_record(&[
            r.image_id.clone(),
            r.patient_id.clone(),
            format!("{}", p[0]),
            format!("{}", p[1]),
            format!("{}", p[2]),
            format!("{}", p[3]),
        ])
        .map_err(|e| ArtifactError::Csv(e.to_string()))?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

pub fn read_predictions(path: &Path) -> Result<Vec<PredictionRow>, ArtifactError> {
    let mut reader = open_checked(path, &PREDICTION_HEADER)?;
    let mut rows = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let line = idx as u64 + 2;
        let record = record.map_err(|e| ArtifactError::Csv(e.to_string()))?;
        let bad = |message: String| ArtifactError::BadValue {
            path: path.display().to_string(),
            line,
            message,
        };
        let mut p = [0.0f64; 4];
        for (k, v) in p.iter_mut().enumerate() {
            let raw = record.get(2 + k).unwrap_or("");
            *v = raw.parse().map_err(|_| bad(format!("probability {raw:?}")))?;
            if !v.is_finite() || *v < 0.0 {
                return Err(bad(format!("probability {v} out of range")));
            }
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > PREDICTION_SUM_TOLERANCE {
            return Err(bad(format!("probabilities sum to {sum}")));
        }
        let dist = DensityDistribution::new(p.map(|v| v / sum))
            .map_err(|e| bad(e.to_string()))?;
        rows.push(PredictionRow {
            image_id: record.get(0).unwrap_or("").to_string(),
            patient_id: record.get(1).unwrap_or("").to_string(),
            dist,
        });
    }
    Ok(rows)
}

// ------------------------------------------------- patient-level predictions

pub const PATIENT_PREDICTION_HEADER: [&str; 7] =
    ["patient_id", "n_images", "pA", "pB", "pC", "pD", "vote_class"];

/// One woman's aggregated prediction: the arithmetic mean distribution over
/// her images plus the vote-rounded class.
#[derive(Debug, Clone, PartialEq)]
pub struct PatientPrediction {
    pub patient_id: String,
    pub n_images: usize,
    pub dist: DensityDistribution,
    pub vote: Density,
}

pub fn write_patient_predictions(
    rows: &[PatientPrediction],
    path: &Path,
) -> Result<(), ArtifactError> {
    let mut w = writer(path)?;
    w.write_record(PATIENT_PREDICTION_HEADER)
        .map_err(|e| ArtifactError::Csv(e.to_string()))?;
    for r in rows {
        let p = r.dist.probabilities();
        w.write_record(&[
            r.patient_id.clone(),
            r.n_images.to_string(),
            format!("{}", p[0]),
            format!("{}", p[1]),
            format!("{}", p[2]),
            format!("{}", p[3]),
            r.vote.to_string(),
        ])
        .map_err(|e| ArtifactError::Csv(e.to_string()))?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

pub fn read_patient_predictions(path: &Path) -> Result<Vec<PatientPrediction>, ArtifactError> {
    let mut reader = open_checked(path, &PATIENT_PREDICTION_HEADER)?;
    let mut rows = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let line = idx as u64 + 2;
        let record = record.map_err(|e| ArtifactError::Csv(e.to_string()))?;
        let bad = |message: String| ArtifactError::BadValue {
            path: path.display().to_string(),
            line,
            message,
        };
        let n_images = record
            .get(1)
            .unwrap_or("")
            .parse()
            .map_err(|_| bad("bad n_images".into()))?;
        let mut p = [0.0f64; 4];
        for (k, v) in p.iter_mut().enumerate() {
            let raw = record.get(2 + k).unwrap_or("");
            *v = raw.parse().map_err(|_| bad(format!("probability {raw:?}")))?;
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > PREDICTION_SUM_TOLERANCE {
            return Err(bad(format!("probabilities sum to {sum}")));
        }
        let dist = DensityDistribution::new(p.map(|v| v / sum)).map_err(|e| bad(e.to_string()))?;
        let vote: Density = record
            .get(6)
            .unwrap_or("")
            .parse()
            .map_err(|_| bad("bad vote_class".into()))?;
        rows.push(PatientPrediction {
            patient_id: record.get(0).unwrap_or("").to_string(),
            n_images,
            dist,
            vote,
        });
    }
    Ok(rows)
}

// ------------------------------------------------------------ cleaning log

pub const CLEANING_LOG_HEADER: [&str; 4] = ["image_id", "status", "reason", "output_ids"];

#[derive(Debug, Clone, PartialEq)]
pub struct CleaningLogRow {
    pub image_id: String,
    pub status: CleaningStatus,
    pub reason: String,
    pub output_ids: Vec<String>,
}

pub fn write_cleaning_log(rows: &[CleaningLogRow], path: &Path) -> Result<(), ArtifactError> {
    let mut w = writer(path)?;
    w.write_record(CLEANING_LOG_HEADER)
        .map_err(|e| ArtifactError::Csv(e.to_string()))?;
    for r in rows {
        w.write_record(&[
            r.image_id.clone(),
            r.status.to_string(),
            r.reason.clone(),
            r.output_ids.join(";"),
        ])
        .map_err(|e| ArtifactError::Csv(e.to_string()))?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

// ------------------------------------------------------------------ splits

pub const SPLIT_HEADER: [&str; 2] = ["patient_id", "split"];

pub fn write_splits(split: &SplitAssignment, path: &Path) -> Result<(), ArtifactError> {
    let mut w = writer(path)?;
    w.write_record(SPLIT_HEADER)
        .map_err(|e| ArtifactError::Csv(e.to_string()))?;
    for (id, s) in &split.assignments {
        w.write_record(&[id.clone(), s.to_string()])
            .map_err(|e| ArtifactError::Csv(e.to_string()))?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

pub fn read_splits(path: &Path) -> Result<BTreeMap<String, Split>, ArtifactError> {
    let mut reader = open_checked(path, &SPLIT_HEADER)?;
    let mut map = BTreeMap::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| ArtifactError::Csv(e.to_string()))?;
        let split: Split = record
            .get(1)
            .unwrap_or("")
            .parse()
            .map_err(|message| ArtifactError::BadValue {
                path: path.display().to_string(),
                line: idx as u64 + 2,
                message,
            })?;
        map.insert(record.get(0).unwrap_or("").to_string(), split);
    }
    Ok(map)
}

// ----------------------------------------------------------------- matched

pub const MATCHED_HEADER: [&str; 3] = ["case_id", "control_id", "key_distance"];

#[derive(Debug, Clone, PartialEq)]
pub struct MatchedPair {
    pub case_id: String,
    pub control_id: String,
    pub key_distance: u32,
}

pub fn write_matched(set: &MatchedSet, path: &Path) -> Result<(), ArtifactError> {
    let mut w = writer(path)?;
    w.write_record(MATCHED_HEADER)
        .map_err(|e| ArtifactError::Csv(e.to_string()))?;
    for (case_id, controls) in &set.pairs {
        for m in controls {
            w.write_record(&[
                case_id.clone(),
                m.control_id.clone(),
                m.key_distance.to_string(),
            ])
            .map_err(|e| ArtifactError::Csv(e.to_string()))?;
        }
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

pub fn read_matched(path: &Path) -> Result<Vec<MatchedPair>, ArtifactError> {
    let mut reader = open_checked(path, &MATCHED_HEADER)?;
    let mut rows = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| ArtifactError::Csv(e.to_string()))?;
        let raw = record.get(2).unwrap_or("");
        let key_distance = raw.parse().map_err(|_| ArtifactError::BadValue {
            path: path.display().to_string(),
            line: idx as u64 + 2,
            message: format!("key_distance {raw:?}"),
        })?;
        rows.push(MatchedPair {
            case_id: record.get(0).unwrap_or("").to_string(),
            control_id: record.get(1).unwrap_or("").to_string(),
            key_distance,
        });
    }
    Ok(rows)
}

// ------------------------------------------------- rejections / exclusions

pub fn write_rejections(rows: &[Rejection], path: &Path) -> Result<(), ArtifactError> {
    let mut w = writer(path)?;
    w.write_record(["line", "patient_id", "reason"])
        .map_err(|e| ArtifactError::Csv(e.to_string()))?;
    for r in rows {
        w.write_record(&[r.line.to_string(), r.patient_id.clone(), r.reason.clone()])
            .map_err(|e| ArtifactError::Csv(e.to_string()))?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

pub fn write_exclusions(report: &ExclusionReport, path: &Path) -> Result<(), ArtifactError> {
    let mut w = writer(path)?;
    w.write_record(["patient_id", "reason"])
        .map_err(|e| ArtifactError::Csv(e.to_string()))?;
    for (id, reason) in &report.excluded {
        w.write_record(&[id.clone(), reason.as_str().to_string()])
            .map_err(|e| ArtifactError::Csv(e.to_string()))?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

// ------------------------------------------------------------------ labels

pub const LABEL_HEADER: [&str; 2] = ["patient_id", "outcome"];

pub fn write_labels(cohort: &Cohort, path: &Path) -> Result<(), ArtifactError> {
    let mut w = writer(path)?;
    w.write_record(LABEL_HEADER)
        .map_err(|e| ArtifactError::Csv(e.to_string()))?;
    for r in cohort.records() {
        w.write_record(&[r.patient_id.clone(), r.outcome.to_string()])
            .map_err(|e| ArtifactError::Csv(e.to_string()))?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

pub fn read_labels(path: &Path) -> Result<BTreeMap<String, Outcome>, ArtifactError> {
    let mut reader = open_checked(path, &LABEL_HEADER)?;
    let mut map = BTreeMap::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| ArtifactError::Csv(e.to_string()))?;
        let outcome = match record.get(1).unwrap_or("") {
            "case" => Outcome::Case,
            "control" => Outcome::Control,
            "undetermined" => Outcome::Undetermined,
            other => {
                return Err(ArtifactError::BadValue {
                    path: path.display().to_string(),
                    line: idx as u64 + 2,
                    message: format!("outcome {other:?}"),
                })
            }
        };
        map.insert(record.get(0).unwrap_or("").to_string(), outcome);
    }
    Ok(map)
}

// ------------------------------------------------------------------- truth

pub fn write_truth(rows: &[TruthRow], path: &Path) -> Result<(), ArtifactError> {
    let mut w = writer(path)?;
    w.write_record([
        "patient_id",
        "density",
        "age_years",
        "linear_predictor",
        "p_case",
        "outcome",
        "n_images",
        "n_invalid",
        "n_dual_view",
    ])
    .map_err(|e| ArtifactError::Csv(e.to_string()))?;
    for t in rows {
        w.write_record(&[
            t.patient_id.clone(),
            t.density.to_string(),
            t.age_years.to_string(),
            format!("{}", t.linear_predictor),
            format!("{}", t.p_case),
            (t.outcome as u8).to_string(),
            t.n_images.to_string(),
            t.n_invalid.to_string(),
            t.n_dual_view.to_string(),
        ])
        .map_err(|e| ArtifactError::Csv(e.to_string()))?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

// ------------------------------------------------------------ eval reports

pub fn write_eval_json(report: &EvalReport, path: &Path) -> Result<(), ArtifactError> {
    let json = serde_json::to_string_pretty(report).map_err(|e| ArtifactError::Csv(e.to_string()))?;
    std::fs::write(path, json).map_err(io_err(path))
}

fn cell_fields(cell: &Option<crate::evaluation::MetricCell>) -> [String; 3] {
    match cell {
        Some(c) => [
            format!("{}", c.auc),
            c.ci.map(|(lo, _)| format!("{lo}")).unwrap_or_default(),
            c.ci.map(|(_, hi)| format!("{hi}")).unwrap_or_default(),
        ],
        None => [String::new(), String::new(), String::new()],
    }
}

/// Flat table: one row per evaluated population (overall, then each
/// subgroup value), columns for the overall and per-class AUCs with their
/// intervals, the dense/non-dense dichotomy, and tau-b.
pub fn write_eval_table(
    report: &EvalReport,
    model_name: &str,
    path: &Path,
) -> Result<(), ArtifactError> {
    let mut w = writer(path)?;
    let mut header = vec![
        "model".to_string(),
        "level".to_string(),
        "subgroup".to_string(),
        "subgroup_value".to_string(),
        "n_instances".to_string(),
        "n_patients".to_string(),
    ];
    for name in ["micro", "a", "b", "c", "d", "dense_vs_nondense"] {
        header.push(format!("{name}_auc"));
        header.push(format!("{name}_lo"));
        header.push(format!("{name}_hi"));
    }
    header.push("tau_b".to_string());
    w.write_record(&header).map_err(|e| ArtifactError::Csv(e.to_string()))?;

    let mut write_block = |subgroup: &str, value: &str, block: &MetricBlock| {
        let mut rec = vec![
            model_name.to_string(),
            report.level.to_string(),
            subgroup.to_string(),
            value.to_string(),
            block.n_instances.to_string(),
            block.n_patients.to_string(),
        ];
        rec.extend(cell_fields(&block.micro));
        for k in 0..4 {
            rec.extend(cell_fields(&block.per_class[k]));
        }
        rec.extend(cell_fields(&block.dichotomized));
        rec.push(block.tau_b.map(|t| format!("{t}")).unwrap_or_default());
        w.write_record(&rec).map_err(|e| ArtifactError::Csv(e.to_string()))
    };

    write_block("", "", &report.overall)?;
    for (tag, values) in &report.subgroups {
        for (value, block) in values {
            write_block(tag, value, block)?;
        }
    }
    Ok(())
}

/// ROC curve points per one-vs-rest class, for external plotting.
pub fn write_roc_points(
    curves: &[(String, Vec<RocPoint>)],
    path: &Path,
) -> Result<(), ArtifactError> {
    let mut w = writer(path)?;
    w.write_record(["curve", "threshold", "fpr", "tpr"])
        .map_err(|e| ArtifactError::Csv(e.to_string()))?;
    for (curve, points) in curves {
        for p in points {
            w.write_record(&[
                curve.clone(),
                format!("{}", p.threshold),
                format!("{}", p.fpr),
                format!("{}", p.tpr),
            ])
            .map_err(|e| ArtifactError::Csv(e.to_string()))?;
        }
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

// ------------------------------------------------------------ risk reports

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskSourceReport {
    pub auroc: RiskAuroc,
    /// Empty for the age-only model.
    pub odds_ratios: Vec<OddsRatioRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub n_women: usize,
    pub n_cases: usize,
    pub n_controls: usize,
    pub folds: usize,
    pub draws_per_woman: usize,
    pub seed: u64,
    pub sources: BTreeMap<String, RiskSourceReport>,
}

pub fn write_risk_json(report: &RiskReport, path: &Path) -> Result<(), ArtifactError> {
    let json = serde_json::to_string_pretty(report).map_err(|e| ArtifactError::Csv(e.to_string()))?;
    std::fs::write(path, json).map_err(io_err(path))
}

/// Odds-ratio table: one row per covariate (A, B reference, C, D, age),
/// OR + interval columns per density source.
pub fn write_risk_or_table(report: &RiskReport, path: &Path) -> Result<(), ArtifactError> {
    let sources: Vec<&String> = report
        .sources
        .iter()
        .filter(|(_, s)| !s.odds_ratios.is_empty())
        .map(|(name, _)| name)
        .collect();
    let mut w = writer(path)?;
    let mut header = vec!["covariate".to_string()];
    for s in &sources {
        header.push(format!("{s}_or"));
        header.push(format!("{s}_lo"));
        header.push(format!("{s}_hi"));
    }
    w.write_record(&header).map_err(|e| ArtifactError::Csv(e.to_string()))?;

    let covariates = ["density_a", "density_b", "density_c", "density_d", "age"];
    for cov in covariates {
        let mut rec = vec![cov.to_string()];
        for s in &sources {
            let table = &report.sources[*s].odds_ratios;
            match table.iter().find(|r| r.name == cov) {
                Some(row) if row.reference => {
                    rec.push("1".to_string());
                    rec.push(String::new());
                    rec.push(String::new());
                }
                Some(row) => {
                    rec.push(format!("{}", row.odds_ratio));
                    rec.push(format!("{}", row.lower));
                    rec.push(format!("{}", row.upper));
                }
                None => rec.extend([String::new(), String::new(), String::new()]),
            }
        }
        w.write_record(&rec).map_err(|e| ArtifactError::Csv(e.to_string()))?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

// -------------------------------------------------------------- stage meta

/// Run metadata written next to each stage's outputs. Contains no
/// timestamps or absolute paths, so reruns are byte-identical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageMeta {
    pub stage: String,
    pub tool_version: String,
    pub seed: u64,
    pub config_digest: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub warnings: Vec<String>,
}

pub fn write_stage_meta(meta: &StageMeta, path: &Path) -> Result<(), ArtifactError> {
    let json = serde_json::to_string_pretty(meta).map_err(|e| ArtifactError::Csv(e.to_string()))?;
    std::fs::write(path, json).map_err(io_err(path))
}
