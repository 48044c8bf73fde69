//! Cohort data model and operations: manifest ingestion, inclusion
//! criteria, case/control labeling, stratified splitting by woman, and
//! case-control matching.
//!
//! Everything here is a pure function of (inputs, seed); a `Cohort` is
//! immutable after construction.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::{Datelike, NaiveDate};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::density::Density;
use crate::stats::derive_seed;

/// A case is a diagnosis at least this many days after the BUS exam...
pub const CASE_WINDOW_MIN_DAYS: i64 = 183;
/// ...and at most this many days after (5 years, leap days ignored).
pub const CASE_WINDOW_MAX_DAYS: i64 = 5 * 365;
/// Maximum |BUS - mammogram| gap for inclusion.
pub const MAX_MAMMOGRAM_GAP_DAYS: i64 = 365;
/// Matching widens the key window in +/-1 steps up to this bound.
pub const MAX_MATCH_WIDENING: u32 = 5;

#[derive(Debug, Error)]
pub enum CohortError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed manifest: {0}")]
    Malformed(String),
    #[error("header mismatch: expected {expected:?}, got {got:?}")]
    HeaderMismatch { expected: String, got: String },
    #[error("duplicate patient_id {0} with conflicting fields")]
    ConflictingDuplicate(String),
    #[error("duplicate patient_id {0}")]
    DuplicatePatient(String),
    #[error("cohort is empty")]
    EmptyCohort,
    #[error("bad split fractions: {0}")]
    BadFractions(String),
    #[error("matching ratio must be at least 1, got {0}")]
    InvalidRatio(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Case,
    Control,
    /// Diagnosis too close to the exam (or inconsistent); excluded from
    /// risk modeling.
    Undetermined,
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Outcome::Case => "case",
            Outcome::Control => "control",
            Outcome::Undetermined => "undetermined",
        })
    }
}

/// One woman: demographics, exam dates, density label, outcome, and image
/// references.
#[derive(Debug, Clone, PartialEq)]
pub struct PatientRecord {
    pub patient_id: String,
    pub birth_year: i32,
    pub mammogram_date: NaiveDate,
    pub bus_date: NaiveDate,
    pub clinical_density: Density,
    pub bus_birads: u8,
    pub negative_screen: bool,
    pub four_views: bool,
    pub prior_cancer: bool,
    pub diagnosis_date: Option<NaiveDate>,
    pub outcome: Outcome,
    pub image_dir: Option<PathBuf>,
    pub image_ids: Vec<String>,
}

impl PatientRecord {
    /// Age in whole years at the BUS exam, derived from birth year.
    pub fn age_at_bus(&self) -> i32 {
        self.bus_date.year() - self.birth_year
    }

    pub fn mammogram_year(&self) -> i32 {
        self.mammogram_date.year()
    }
}

/// Immutable collection of patients keyed by id.
#[derive(Debug, Clone, Default)]
pub struct Cohort {
    records: BTreeMap<String, PatientRecord>,
    pub provenance: Option<PathBuf>,
}

impl Cohort {
    pub fn from_records(records: Vec<PatientRecord>) -> Result<Self, CohortError> {
        let mut map = BTreeMap::new();
        for r in records {
            let id = r.patient_id.clone();
            if map.insert(id.clone(), r).is_some() {
                return Err(CohortError::DuplicatePatient(id));
            }
        }
        Ok(Cohort {
            records: map,
            provenance: None,
        })
    }

    /// Records in patient-id order.
    pub fn records(&self) -> impl Iterator<Item = &PatientRecord> {
        self.records.values()
    }

    pub fn get(&self, patient_id: &str) -> Option<&PatientRecord> {
        self.records.get(patient_id)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Documented manifest header, in order.
pub const MANIFEST_HEADER: [&str; 11] = [
    "patient_id",
    "birth_year",
    "mammogram_date",
    "bus_date",
    "clinical_density",
    "bus_birads",
    "negative_screen",
    "four_views",
    "prior_cancer",
    "diagnosis_date",
    "image_dir",
];

/// A manifest row that could not become a record, with a reason code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub line: u64,
    pub patient_id: String,
    pub reason: String,
}

#[derive(Debug)]
pub struct IngestReport {
    pub cohort: Cohort,
    pub rejections: Vec<Rejection>,
}

/// Read a cohort manifest CSV. Rows with unparseable fields or unknown
/// density codes land in the rejection list rather than being silently
/// dropped; structural problems (missing file, header mismatch, conflicting
/// duplicate ids) are errors.
pub fn ingest_cohort(manifest_path: &Path) -> Result<IngestReport, CohortError> {
    let file = std::fs::File::open(manifest_path).map_err(|source| CohortError::Io {
        path: manifest_path.display().to_string(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);

    let headers = reader
        .headers()
        .map_err(|e| CohortError::Malformed(e.to_string()))?
        .clone();
    let got: Vec<&str> = headers.iter().collect();
    if got != MANIFEST_HEADER {
        return Err(CohortError::HeaderMismatch {
            expected: MANIFEST_HEADER.join(","),
            got: got.join(","),
        });
    }

    let base_dir = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let mut records: BTreeMap<String, PatientRecord> = BTreeMap::new();
    let mut rejections = Vec::new();

    for (idx, row) in reader.records().enumerate() {
        let line = idx as u64 + 2; // 1-based, after the header
        let row = row.map_err(|e| CohortError::Malformed(e.to_string()))?;
        let field = |i: usize| row.get(i).unwrap_or("").trim().to_string();
        let patient_id = field(0);

        macro_rules! reject {
            ($reason:expr) => {{
                rejections.push(Rejection {
                    line,
                    patient_id: patient_id.clone(),
                    reason: $reason.to_string(),
                });
                continue;
            }};
        }

        if patient_id.is_empty() || patient_id.contains("__") {
            reject!("invalid_patient_id");
        }
        let Ok(birth_year) = field(1).parse::<i32>() else {
            reject!("bad_birth_year");
        };
        let Ok(mammogram_date) = parse_date(&field(2)) else {
            reject!("bad_date");
        };
        let Ok(bus_date) = parse_date(&field(3)) else {
            reject!("bad_date");
        };
        let Ok(clinical_density) = field(4).parse::<Density>() else {
            reject!("unknown_density");
        };
        let Ok(bus_birads) = field(5).parse::<u8>() else {
            reject!("bad_birads");
        };
        if bus_birads == 0 || bus_birads > 6 {
            reject!("bad_birads");
        }
        let (Some(negative_screen), Some(four_views), Some(prior_cancer)) = (
            parse_flag(&field(6)),
            parse_flag(&field(7)),
            parse_flag(&field(8)),
        ) else {
            reject!("bad_flag");
        };
        let diagnosis_date = {
            let s = field(9);
            if s.is_empty() {
                None
            } else {
                match parse_date(&s) {
                    Ok(d) => Some(d),
                    Err(_) => reject!("bad_date"),
                }
            }
        };
        let image_dir = {
            let s = field(10);
            if s.is_empty() {
                None
            } else {
                Some(base_dir.join(s))
            }
        };

        let image_ids = image_dir
            .as_deref()
            .map(|dir| discover_images(dir, &patient_id))
            .unwrap_or_default();

        let record = PatientRecord {
            patient_id: patient_id.clone(),
            birth_year,
            mammogram_date,
            bus_date,
            clinical_density,
            bus_birads,
            negative_screen,
            four_views,
            prior_cancer,
            diagnosis_date,
            outcome: Outcome::Undetermined,
            image_dir,
            image_ids,
        };

        match records.get(&patient_id) {
            None => {
                records.insert(patient_id, record);
            }
            Some(existing) if *existing == record => reject!("duplicate_row"),
            Some(_) => return Err(CohortError::ConflictingDuplicate(patient_id)),
        }
    }

    Ok(IngestReport {
        cohort: Cohort {
            records,
            provenance: Some(manifest_path.to_path_buf()),
        },
        rejections,
    })
}

fn parse_date(s: &str) -> Result<NaiveDate, chrono::ParseError> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
}

fn parse_flag(s: &str) -> Option<bool> {
    match s {
        "0" => Some(false),
        "1" => Some(true),
        _ => None,
    }
}

/// Image files belonging to a patient: `<patient_id>__*.png|pgm` in the
/// patient's image directory, sorted by id. The `__` separator makes every
/// image resolve to exactly one patient.
fn discover_images(dir: &Path, patient_id: &str) -> Vec<String> {
    let prefix = format!("{patient_id}__");
    let mut ids = Vec::new();
    if let Ok(entries) = std::fs::read_dir(dir) {
        for entry in entries.flatten() {
            let path = entry.path();
            let ext = path
                .extension()
                .map(|e| e.to_string_lossy().to_lowercase())
                .unwrap_or_default();
            if ext != "png" && ext != "pgm" {
                continue;
            }
            if let Some(stem) = path.file_stem() {
                let stem = stem.to_string_lossy();
                if stem.starts_with(&prefix) {
                    ids.push(stem.into_owned());
                }
            }
        }
    }
    ids.sort();
    ids
}

/// Inclusion criteria in evaluation order (a) through (e); only the first
/// failing criterion is recorded for each excluded woman.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusionReason {
    /// (a) no negative screening mammogram
    NoNegativeScreen,
    /// (b) BUS exam not BI-RADS 1, 2, or 3
    BusNotBenign,
    /// (b) BUS exam more than a year from the mammogram
    BusNotWithinYear,
    /// (c) missing clinical density (structurally absent after ingestion,
    /// kept so the accounting matches the criterion list)
    MissingDensity,
    /// (d) standard four mammogram views not captured
    NotFourViews,
    /// (e) breast cancer history before the screening mammogram
    PriorHistory,
}

pub const EXCLUSION_ORDER: [ExclusionReason; 6] = [
    ExclusionReason::NoNegativeScreen,
    ExclusionReason::BusNotBenign,
    ExclusionReason::BusNotWithinYear,
    ExclusionReason::MissingDensity,
    ExclusionReason::NotFourViews,
    ExclusionReason::PriorHistory,
];

impl ExclusionReason {
    pub fn as_str(self) -> &'static str {
        match self {
            ExclusionReason::NoNegativeScreen => "no_negative_screen",
            ExclusionReason::BusNotBenign => "bus_not_benign",
            ExclusionReason::BusNotWithinYear => "bus_not_within_year",
            ExclusionReason::MissingDensity => "missing_density",
            ExclusionReason::NotFourViews => "not_four_views",
            ExclusionReason::PriorHistory => "prior_history",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExclusionReport {
    pub input: usize,
    pub retained: usize,
    /// Per-criterion tallies in evaluation order.
    pub counts: Vec<(ExclusionReason, usize)>,
    /// (patient_id, first failing criterion) for every excluded woman.
    pub excluded: Vec<(String, ExclusionReason)>,
}

fn first_failed_criterion(r: &PatientRecord) -> Option<ExclusionReason> {
    if !r.negative_screen {
        return Some(ExclusionReason::NoNegativeScreen);
    }
    if !(1..=3).contains(&r.bus_birads) {
        return Some(ExclusionReason::BusNotBenign);
    }
    let gap = (r.bus_date - r.mammogram_date).num_days().abs();
    if gap > MAX_MAMMOGRAM_GAP_DAYS {
        return Some(ExclusionReason::BusNotWithinYear);
    }
    // (c) density present: guaranteed by ingestion, never fires here
    if !r.four_views {
        return Some(ExclusionReason::NotFourViews);
    }
    if r.prior_cancer {
        return Some(ExclusionReason::PriorHistory);
    }
    None
}

/// Filter the cohort by the inclusion criteria. Total: every input record
/// is either retained or tallied under exactly one reason.
pub fn apply_inclusion_criteria(cohort: &Cohort) -> (Cohort, ExclusionReport) {
    let mut retained = BTreeMap::new();
    let mut excluded = Vec::new();
    let mut tally: BTreeMap<&str, usize> = BTreeMap::new();

    for record in cohort.records() {
        match first_failed_criterion(record) {
            None => {
                retained.insert(record.patient_id.clone(), record.clone());
            }
            Some(reason) => {
                *tally.entry(reason.as_str()).or_default() += 1;
                excluded.push((record.patient_id.clone(), reason));
            }
        }
    }

    let counts = EXCLUSION_ORDER
        .iter()
        .map(|&r| (r, tally.get(r.as_str()).copied().unwrap_or(0)))
        .collect();
    let report = ExclusionReport {
        input: cohort.len(),
        retained: retained.len(),
        counts,
        excluded,
    };
    let filtered = Cohort {
        records: retained,
        provenance: cohort.provenance.clone(),
    };
    (filtered, report)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabelSummary {
    pub cases: usize,
    pub controls: usize,
    pub undetermined: usize,
    /// Patients whose diagnosis date precedes the BUS exam.
    pub inconsistent: Vec<String>,
}

/// Assign outcomes: case when the diagnosis falls from 6 months to 5 years
/// after the BUS exam, control when no diagnosis lands inside that window,
/// undetermined when the diagnosis is within 6 months. A diagnosis before
/// the exam is flagged inconsistent and left undetermined.
pub fn label_cases_controls(cohort: &Cohort) -> (Cohort, LabelSummary) {
    let mut records = BTreeMap::new();
    let mut summary = LabelSummary::default();

    for record in cohort.records() {
        let mut r = record.clone();
        r.outcome = match r.diagnosis_date {
            None => Outcome::Control,
            Some(dx) => {
                let gap = (dx - r.bus_date).num_days();
                if gap < 0 {
                    summary.inconsistent.push(r.patient_id.clone());
                    Outcome::Undetermined
                } else if gap < CASE_WINDOW_MIN_DAYS {
                    Outcome::Undetermined
                } else if gap <= CASE_WINDOW_MAX_DAYS {
                    Outcome::Case
                } else {
                    Outcome::Control
                }
            }
        };
        match r.outcome {
            Outcome::Case => summary.cases += 1,
            Outcome::Control => summary.controls += 1,
            Outcome::Undetermined => summary.undetermined += 1,
        }
        records.insert(r.patient_id.clone(), r);
    }
    (
        Cohort {
            records,
            provenance: cohort.provenance.clone(),
        },
        summary,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl std::fmt::Display for Split {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        })
    }
}

impl std::str::FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "validation" => Ok(Split::Validation),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split {other:?}")),
        }
    }
}

const SPLIT_ORDER: [Split; 3] = [Split::Train, Split::Validation, Split::Test];

/// Assignment of every woman to exactly one split.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitAssignment {
    pub assignments: BTreeMap<String, Split>,
    pub seed: u64,
    pub fractions: Vec<f64>,
    pub warnings: Vec<String>,
}

impl SplitAssignment {
    pub fn patients_in(&self, split: Split) -> Vec<&str> {
        self.assignments
            .iter()
            .filter(|(_, &s)| s == split)
            .map(|(id, _)| id.as_str())
            .collect()
    }
}

/// Partition women into 2 or 3 splits, stratified by clinical density.
/// Within each density stratum the split counts deviate from the targets by
/// less than one patient (largest-remainder apportionment); a stratum with
/// fewer patients than splits goes entirely to train, with a warning.
/// Deterministic given the seed.
pub fn stratified_split(
    cohort: &Cohort,
    fractions: &[f64],
    seed: u64,
) -> Result<SplitAssignment, CohortError> {
    if cohort.is_empty() {
        return Err(CohortError::EmptyCohort);
    }
    if !(2..=3).contains(&fractions.len()) {
        return Err(CohortError::BadFractions(format!(
            "need 2 or 3 fractions, got {}",
            fractions.len()
        )));
    }
    if fractions.iter().any(|&f| f.is_nan() || f <= 0.0) {
        return Err(CohortError::BadFractions("fractions must be positive".into()));
    }
    let sum: f64 = fractions.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(CohortError::BadFractions(format!("fractions sum to {sum}")));
    }

    let mut strata: BTreeMap<Density, Vec<&str>> = BTreeMap::new();
    for r in cohort.records() {
        strata.entry(r.clinical_density).or_default().push(&r.patient_id);
    }

    let mut assignments = BTreeMap::new();
    let mut warnings = Vec::new();
    for (density, mut ids) in strata {
        ids.sort_unstable();
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, density.index() as u64));
        ids.shuffle(&mut rng);

        if ids.len() < fractions.len() {
            warnings.push(format!(
                "stratum {density} has {} patients for {} splits; all assigned to train",
                ids.len(),
                fractions.len()
            ));
            for id in ids {
                assignments.insert(id.to_string(), Split::Train);
            }
            continue;
        }

        let counts = apportion(ids.len(), fractions);
        let mut cursor = 0;
        for (k, &count) in counts.iter().enumerate() {
            for id in &ids[cursor..cursor + count] {
                assignments.insert(id.to_string(), SPLIT_ORDER[k]);
            }
            cursor += count;
        }
    }

    Ok(SplitAssignment {
        assignments,
        seed,
        fractions: fractions.to_vec(),
        warnings,
    })
}

/// Largest-remainder apportionment of `n` into parts proportional to
/// `fractions`; each part lands within one of its exact target. Remainder
/// ties go to the earlier split.
fn apportion(n: usize, fractions: &[f64]) -> Vec<usize> {
    let targets: Vec<f64> = fractions.iter().map(|f| f * n as f64).collect();
    let mut counts: Vec<usize> = targets.iter().map(|t| t.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..fractions.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = targets[a] - targets[a].floor();
        let rb = targets[b] - targets[b].floor();
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    for k in 0..n - assigned {
        counts[order[k % fractions.len()]] += 1;
    }
    counts
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchKey {
    BirthYear,
    MammogramYear,
}

impl MatchKey {
    fn value(self, r: &PatientRecord) -> i32 {
        match self {
            MatchKey::BirthYear => r.birth_year,
            MatchKey::MammogramYear => r.mammogram_year(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedControl {
    pub control_id: String,
    /// |key(case) - key(control)|; 0 for an exact match.
    pub key_distance: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchedSet {
    /// case patient_id -> matched controls
    pub pairs: BTreeMap<String, Vec<MatchedControl>>,
    pub key: MatchKey,
    pub ratio: u32,
    pub warnings: Vec<String>,
}

impl MatchedSet {
    pub fn n_cases(&self) -> usize {
        self.pairs.len()
    }

    pub fn n_controls(&self) -> usize {
        self.pairs.values().map(|v| v.len()).sum()
    }
}

/// Sample up to `ratio` controls per case without replacement, first at the
/// exact key, then widening by +/-1 year steps up to +/-5, recording each
/// control's key distance. No control is reused across cases. Deterministic
/// given the seed; a cohort without cases yields an empty set plus a
/// warning.
pub fn match_case_control(
    cohort: &Cohort,
    ratio: u32,
    key: MatchKey,
    seed: u64,
) -> Result<MatchedSet, CohortError> {
    if ratio < 1 {
        return Err(CohortError::InvalidRatio(ratio));
    }

    let mut cases: Vec<&PatientRecord> = cohort
        .records()
        .filter(|r| r.outcome == Outcome::Case)
        .collect();
    let mut warnings = Vec::new();
    if cases.is_empty() {
        warnings.push("no cases in cohort; matched set is empty".to_string());
        return Ok(MatchedSet {
            pairs: BTreeMap::new(),
            key,
            ratio,
            warnings,
        });
    }

    // per-key pools of controls, each shuffled deterministically; matches
    // pop from the end
    let mut pools: BTreeMap<i32, Vec<String>> = BTreeMap::new();
    for r in cohort.records().filter(|r| r.outcome == Outcome::Control) {
        pools.entry(key.value(r)).or_default().push(r.patient_id.clone());
    }
    for (k, pool) in pools.iter_mut() {
        pool.sort_unstable();
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, *k as u64));
        pool.shuffle(&mut rng);
    }

    // case processing order is shuffled too, so pool depletion is not
    // biased by id ordering
    let mut order_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, u64::MAX));
    cases.sort_by(|a, b| a.patient_id.cmp(&b.patient_id));
    cases.shuffle(&mut order_rng);

    let mut pairs: BTreeMap<String, Vec<MatchedControl>> = BTreeMap::new();
    for case in &cases {
        let case_key = key.value(case);
        let mut matched = Vec::new();
        'widen: for distance in 0..=MAX_MATCH_WIDENING {
            let offsets: &[i32] = if distance == 0 {
                &[0]
            } else {
                &[-(distance as i32), distance as i32]
            };
            for &off in offsets {
                if let Some(pool) = pools.get_mut(&(case_key + off)) {
                    while matched.len() < ratio as usize {
                        match pool.pop() {
                            Some(control_id) => matched.push(MatchedControl {
                                control_id,
                                key_distance: distance,
                            }),
                            None => break,
                        }
                    }
                }
                if matched.len() == ratio as usize {
                    break 'widen;
                }
            }
        }
        if matched.len() < ratio as usize {
            warnings.push(format!(
                "case {} matched only {} of {} controls within +/-{} of key {}",
                case.patient_id,
                matched.len(),
                ratio,
                MAX_MATCH_WIDENING,
                case_key
            ));
        }
        if matched.iter().any(|m| m.key_distance > 0) {
            warnings.push(format!(
                "case {} used widened matches (max distance {})",
                case.patient_id,
                matched.iter().map(|m| m.key_distance).max().unwrap()
            ));
        }
        pairs.insert(case.patient_id.clone(), matched);
    }

    Ok(MatchedSet {
        pairs,
        key,
        ratio,
        warnings,
    })
}
