//! 5-year cancer-risk logistic models: age standardization, Monte-Carlo
//! density simulation, grouped cross-validated AUROC, and odds ratios with
//! Wald confidence intervals.
//!
//! Density enters the design one-hot with class B (scattered) as the
//! reference, so the coefficient columns are intercept, standardized age,
//! and indicators for A, C, and D.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::density::{Density, DensityDistribution};
use crate::evaluation::{delong_ci, DelongCi};
use crate::stats::{derive_seed, mean, sample_sd, z_critical};

const NEWTON_TOL: f64 = 1e-8;
const NEWTON_MAX_ITER: usize = 100;
/// Any coefficient beyond this during fitting signals (quasi-)separation.
const SEPARATION_BOUND: f64 = 30.0;

#[derive(Debug, Error)]
pub enum RiskError {
    #[error("empty input")]
    EmptyInput,
    #[error("ages have zero variance")]
    ZeroAgeVariance,
    #[error("need at least 2 distinct ages")]
    TooFewAges,
    #[error("both outcome classes must be present")]
    SingleOutcomeClass,
    #[error("training fold {0} has a single outcome class")]
    FoldSingleClass(usize),
    #[error("design matrix is rank deficient at column {column}")]
    RankDeficient { column: String },
    #[error("quasi_separation: coefficient exceeded {SEPARATION_BOUND} during fitting")]
    QuasiSeparation,
    #[error("Newton-Raphson did not converge in {NEWTON_MAX_ITER} iterations")]
    NotConverged,
    #[error("need at least 2 folds, got {0}")]
    TooFewFolds(usize),
    #[error("woman {0} has no predicted density distribution")]
    MissingPrediction(String),
    #[error("confidence interval: {0}")]
    Ci(#[from] crate::evaluation::EvalError),
}

/// Mean/SD pair estimated on one population and reapplied to another,
/// preventing leakage across folds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgeStandardization {
    pub mean: f64,
    pub sd: f64,
}

impl AgeStandardization {
    pub fn apply(&self, age: f64) -> f64 {
        (age - self.mean) / self.sd
    }
}

/// Standardize ages to zero mean and unit variance (sample SD, n-1
/// denominator), returning the parameters for reuse on held-out data.
pub fn standardize_age(ages: &[f64]) -> Result<(Vec<f64>, AgeStandardization), RiskError> {
    if ages.len() < 2 {
        return Err(RiskError::TooFewAges);
    }
    let params = AgeStandardization {
        mean: mean(ages),
        sd: sample_sd(ages),
    };
    if params.sd.is_nan() || params.sd <= 0.0 {
        return Err(RiskError::ZeroAgeVariance);
    }
    Ok((ages.iter().map(|&a| params.apply(a)).collect(), params))
}

/// One woman's design inputs for the risk model.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskDesignRow {
    pub patient_id: String,
    pub age_std: f64,
    pub density: Density,
    pub outcome: bool,
}

impl RiskDesignRow {
    /// [intercept, age, A, C, D]; class B encodes as all-zero indicators.
    fn design(&self) -> Vec<f64> {
        let mut row = vec![1.0, self.age_std, 0.0, 0.0, 0.0];
        match self.density {
            Density::A => row[2] = 1.0,
            Density::B => {}
            Density::C => row[3] = 1.0,
            Density::D => row[4] = 1.0,
        }
        row
    }
}

pub const RISK_COVARIATES: [&str; 5] = ["intercept", "age", "density_a", "density_c", "density_d"];

/// Fitted logistic model with the observed-information covariance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskModel {
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    /// Inverse observed information at the optimum, row-major p x p.
    pub covariance: Vec<Vec<f64>>,
}

impl RiskModel {
    pub fn standard_errors(&self) -> Vec<f64> {
        (0..self.coefficients.len())
            .map(|i| self.covariance[i][i].max(0.0).sqrt())
            .collect()
    }

    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.coefficients[i])
    }

    pub fn standard_error(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.covariance[i][i].max(0.0).sqrt())
    }

    /// Linear predictor for a raw design row.
    pub fn linear_predictor(&self, design: &[f64]) -> f64 {
        design.iter().zip(&self.coefficients).map(|(x, b)| x * b).sum()
    }
}

/// Maximum-likelihood fit of the age + density risk model.
pub fn fit_risk_model(rows: &[RiskDesignRow]) -> Result<RiskModel, RiskError> {
    let design: Vec<Vec<f64>> = rows.iter().map(|r| r.design()).collect();
    let outcomes: Vec<bool> = rows.iter().map(|r| r.outcome).collect();
    let names: Vec<String> = RISK_COVARIATES.iter().map(|s| s.to_string()).collect();
    fit_logistic(&design, &outcomes, &names)
}

/// Newton-Raphson maximum-likelihood logistic fit on an arbitrary design,
/// to gradient max-norm < 1e-8. The covariance is the inverse observed
/// information at the optimum. Errors name the collinear column on rank
/// deficiency and report quasi-separation when a coefficient diverges.
#[allow(clippy::needless_range_loop)]
pub fn fit_logistic(
    design: &[Vec<f64>],
    outcomes: &[bool],
    names: &[String],
) -> Result<RiskModel, RiskError> {
    let n = design.len();
    if n == 0 {
        return Err(RiskError::EmptyInput);
    }
    let p = names.len();
    debug_assert!(design.iter().all(|r| r.len() == p));
    let n_cases = outcomes.iter().filter(|&&o| o).count();
    if n_cases == 0 || n_cases == n {
        return Err(RiskError::SingleOutcomeClass);
    }

    check_full_rank(design, names)?;

    let mut beta = vec![0.0; p];
    for _ in 0..NEWTON_MAX_ITER {
        if beta.iter().any(|b: &f64| b.abs() > SEPARATION_BOUND) {
            return Err(RiskError::QuasiSeparation);
        }

        let mut grad = vec![0.0; p];
        let mut info = vec![vec![0.0; p]; p];
        for (x, &y) in design.iter().zip(outcomes) {
            let eta: f64 = x.iter().zip(&beta).map(|(v, b)| v * b).sum();
            let prob = sigmoid(eta);
            let resid = (y as u8 as f64) - prob;
            let w = prob * (1.0 - prob);
            for i in 0..p {
                grad[i] += x[i] * resid;
                for j in i..p {
                    info[i][j] += w * x[i] * x[j];
                }
            }
        }
        for i in 0..p {
            for j in 0..i {
                info[i][j] = info[j][i];
            }
        }

        if grad.iter().all(|g| g.abs() < NEWTON_TOL) {
            let covariance = invert_spd(&info).ok_or(RiskError::QuasiSeparation)?;
            return Ok(RiskModel {
                names: names.to_vec(),
                coefficients: beta,
                covariance,
            });
        }

        let step = solve_spd(&info, &grad).ok_or(RiskError::QuasiSeparation)?;
        for (b, s) in beta.iter_mut().zip(&step) {
            *b += s;
        }
    }
    Err(RiskError::NotConverged)
}

fn sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

/// Gaussian elimination on the Gram matrix with partial pivoting; a missing
/// pivot names the collinear column.
#[allow(clippy::needless_range_loop)]
fn check_full_rank(design: &[Vec<f64>], names: &[String]) -> Result<(), RiskError> {
    let p = names.len();
    let mut gram = vec![vec![0.0; p]; p];
    for x in design {
        for i in 0..p {
            for j in 0..p {
                gram[i][j] += x[i] * x[j];
            }
        }
    }
    let scale = (0..p).map(|i| gram[i][i]).fold(0.0f64, f64::max).max(1e-300);
    let tol = 1e-10 * scale;

    for col in 0..p {
        let pivot_row = (col..p)
            .max_by(|&a, &b| gram[a][col].abs().partial_cmp(&gram[b][col].abs()).unwrap())
            .unwrap();
        if gram[pivot_row][col].abs() < tol {
            return Err(RiskError::RankDeficient {
                column: names[col].clone(),
            });
        }
        gram.swap(col, pivot_row);
        for row in col + 1..p {
            let factor = gram[row][col] / gram[col][col];
            for k in col..p {
                gram[row][k] -= factor * gram[col][k];
            }
        }
    }
    Ok(())
}

/// Cholesky factor of a symmetric positive-definite matrix; None when not PD.
#[allow(clippy::needless_range_loop)]
fn cholesky(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let p = a.len();
    let mut l = vec![vec![0.0; p]; p];
    for i in 0..p {
        for j in 0..=i {
            let mut sum = a[i][j];
            for k in 0..j {
                sum -= l[i][k] * l[j][k];
            }
            if i == j {
                if sum <= 0.0 {
                    return None;
                }
                l[i][j] = sum.sqrt();
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    Some(l)
}

fn solve_with_factor(l: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let p = l.len();
    let mut y = vec![0.0; p];
    for i in 0..p {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i][k] * y[k];
        }
        y[i] = sum / l[i][i];
    }
    let mut x = vec![0.0; p];
    for i in (0..p).rev() {
        let mut sum = y[i];
        for k in i + 1..p {
            sum -= l[k][i] * x[k];
        }
        x[i] = sum / l[i][i];
    }
    x
}

fn solve_spd(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let l = cholesky(a)?;
    Some(solve_with_factor(&l, b))
}

#[allow(clippy::needless_range_loop)]
fn invert_spd(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let p = a.len();
    let l = cholesky(a)?;
    let mut inv = vec![vec![0.0; p]; p];
    for col in 0..p {
        let mut unit = vec![0.0; p];
        unit[col] = 1.0;
        let x = solve_with_factor(&l, &unit);
        for row in 0..p {
            inv[row][col] = x[row];
        }
    }
    // symmetrize rounding
    for i in 0..p {
        for j in 0..i {
            let v = (inv[i][j] + inv[j][i]) / 2.0;
            inv[i][j] = v;
            inv[j][i] = v;
        }
    }
    Some(inv)
}

/// One odds-ratio table row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OddsRatioRow {
    pub name: String,
    pub odds_ratio: f64,
    pub lower: f64,
    pub upper: f64,
    /// True for the synthesized reference-class row (OR fixed at 1).
    pub reference: bool,
}

/// Wald odds ratios: exp(beta) with exp(beta +/- z * SE) intervals for every
/// non-intercept covariate. When density indicators are present, a
/// reference row for class B is inserted between A and C.
pub fn odds_ratios(model: &RiskModel, alpha: f64) -> Vec<OddsRatioRow> {
    let z = z_critical(alpha);
    let ses = model.standard_errors();
    let mut rows = Vec::new();
    for ((name, &beta), &se) in model.names.iter().zip(&model.coefficients).zip(&ses) {
        if name == "intercept" {
            continue;
        }
        rows.push(OddsRatioRow {
            name: name.clone(),
            odds_ratio: beta.exp(),
            lower: (beta - z * se).exp(),
            upper: (beta + z * se).exp(),
            reference: false,
        });
        if name == "density_a" {
            rows.push(OddsRatioRow {
                name: "density_b".to_string(),
                odds_ratio: 1.0,
                lower: 1.0,
                upper: 1.0,
                reference: true,
            });
        }
    }
    rows
}

/// Independent categorical draws from a density distribution.
pub fn simulate_density_draws(
    dist: &DensityDistribution,
    n: usize,
    seed: u64,
) -> Vec<Density> {
    let p = dist.probabilities();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            for (k, &pk) in p.iter().enumerate() {
                acc += pk;
                if u < acc {
                    return Density::from_index(k).unwrap();
                }
            }
            Density::D
        })
        .collect()
}

/// Which density measure feeds the risk model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensitySource {
    Clinical,
    Predicted,
    AgeOnly,
}

impl std::fmt::Display for DensitySource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DensitySource::Clinical => "clinical",
            DensitySource::Predicted => "predicted",
            DensitySource::AgeOnly => "age_only",
        })
    }
}

/// One woman's inputs to risk modeling.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskCohortRow {
    pub patient_id: String,
    pub age: f64,
    pub outcome: bool,
    pub clinical: Density,
    pub predicted: Option<DensityDistribution>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskAuroc {
    pub auc: f64,
    pub lower: f64,
    pub upper: f64,
    pub n_women: usize,
}

/// Midrank percentiles: rank / (n + 1) with ties averaged.
fn midrank_percentiles(scores: &[f64]) -> Vec<f64> {
    let n = scores.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());
    let mut out = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            out[idx] = rank / (n as f64 + 1.0);
        }
        i = j + 1;
    }
    out
}

/// Deterministic fold labels for a list of women: shuffled round-robin.
pub fn assign_folds(ids: &[&str], folds: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..ids.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0xF01D));
    order.shuffle(&mut rng);
    let mut fold = vec![0; ids.len()];
    for (rank, &idx) in order.iter().enumerate() {
        fold[idx] = rank % folds;
    }
    fold
}

/// Grouped cross-validated risk AUROC. Women partition into folds; each
/// fold's model trains on the remaining women (with the age
/// standardization estimated on those training women only) and scores the
/// held-out women once. Pooled held-out scores yield the AUROC with its
/// DeLong interval.
///
/// Each fold's held-out scores are mapped to within-fold midrank
/// percentiles before pooling. Fold models differ by estimation noise, so
/// raw linear predictors from different folds are not on a common scale;
/// the percentile transform is rank-preserving within a fold and puts
/// every fold on one scale.
///
/// Fold estimates are positively correlated because every fold's noise
/// also sits in the other folds' training sets; the plain DeLong variance
/// of pooled cross-validation scores cannot see that and under-covers.
/// The interval therefore uses the Nadeau-Bengio resampling correction,
/// inflating the variance by 1 + folds * (test share / train share)
/// = 1 + folds/(folds - 1).
///
/// With the predicted source the training design takes `draws_per_woman`
/// simulated density draws per woman, and held-out women are scored on
/// their expected indicators (the distribution itself).
pub fn cv_risk_auroc(
    rows: &[RiskCohortRow],
    folds: usize,
    seed: u64,
    source: DensitySource,
    draws_per_woman: usize,
) -> Result<RiskAuroc, RiskError> {
    if rows.is_empty() {
        return Err(RiskError::EmptyInput);
    }
    if folds < 2 {
        return Err(RiskError::TooFewFolds(folds));
    }
    if source == DensitySource::Predicted {
        if let Some(row) = rows.iter().find(|r| r.predicted.is_none()) {
            return Err(RiskError::MissingPrediction(row.patient_id.clone()));
        }
    }

    let ids: Vec<&str> = rows.iter().map(|r| r.patient_id.as_str()).collect();
    let fold_of = assign_folds(&ids, folds, seed);

    let mut scores = vec![0.0; rows.len()];
    let mut scored = vec![false; rows.len()];
    for fold in 0..folds {
        let train_idx: Vec<usize> = (0..rows.len()).filter(|&i| fold_of[i] != fold).collect();
        let test_idx: Vec<usize> = (0..rows.len()).filter(|&i| fold_of[i] == fold).collect();
        if test_idx.is_empty() {
            continue;
        }
        let train_cases = train_idx.iter().filter(|&&i| rows[i].outcome).count();
        if train_cases == 0 || train_cases == train_idx.len() {
            return Err(RiskError::FoldSingleClass(fold));
        }

        let ages: Vec<f64> = train_idx.iter().map(|&i| rows[i].age).collect();
        let (_, age_std) = standardize_age(&ages)?;

        let (model, spec) =
            fit_fold_model(rows, &train_idx, &age_std, source, draws_per_woman, seed, fold)?;

        let fold_scores: Vec<f64> = test_idx
            .iter()
            .map(|&i| model.linear_predictor(&score_design(&rows[i], &age_std, source, &spec)))
            .collect();
        let percentiles = midrank_percentiles(&fold_scores);
        for (&i, &p) in test_idx.iter().zip(&percentiles) {
            scores[i] = p;
            scored[i] = true;
        }
    }
    debug_assert!(scored.iter().all(|&s| s), "every woman scored exactly once");

    let outcomes: Vec<bool> = rows.iter().map(|r| r.outcome).collect();
    let ci: DelongCi = delong_ci(&scores, &outcomes, 0.05)?;
    let inflation = 1.0 + folds as f64 / (folds as f64 - 1.0);
    let half = z_critical(0.05) * (ci.variance * inflation).max(0.0).sqrt();
    Ok(RiskAuroc {
        auc: ci.auc,
        lower: (ci.auc - half).clamp(0.0, 1.0),
        upper: (ci.auc + half).clamp(0.0, 1.0),
        n_women: rows.len(),
    })
}

/// Design layout for one fit: intercept, age, and whichever non-reference
/// density indicators actually occur in the training data. Indicators for
/// absent classes would be all-zero (rank-deficient) columns, so small
/// matched sets fit on the reduced design and simply have no estimate for
/// the missing class.
#[derive(Debug, Clone, Copy)]
struct DesignSpec {
    with_density: bool,
    /// Indicator presence for A, C, D (B is the reference).
    active: [bool; 3],
}

const INDICATOR_CLASSES: [Density; 3] = [Density::A, Density::C, Density::D];

impl DesignSpec {
    fn age_only() -> Self {
        DesignSpec {
            with_density: false,
            active: [false; 3],
        }
    }

    fn for_training(densities: impl Iterator<Item = Density>) -> Self {
        let mut active = [false; 3];
        for d in densities {
            if let Some(k) = INDICATOR_CLASSES.iter().position(|&c| c == d) {
                active[k] = true;
            }
        }
        DesignSpec {
            with_density: true,
            active,
        }
    }

    fn names(&self) -> Vec<String> {
        let mut names = vec!["intercept".to_string(), "age".to_string()];
        if self.with_density {
            for (k, class) in INDICATOR_CLASSES.iter().enumerate() {
                if self.active[k] {
                    names.push(format!("density_{}", class.as_str().to_lowercase()));
                }
            }
        }
        names
    }

    fn row(&self, age_std: f64, density: Density) -> Vec<f64> {
        let mut row = vec![1.0, age_std];
        if self.with_density {
            for (k, class) in INDICATOR_CLASSES.iter().enumerate() {
                if self.active[k] {
                    row.push(if density == *class { 1.0 } else { 0.0 });
                }
            }
        }
        row
    }

    /// Expected indicators for scoring: the predicted probabilities of the
    /// active classes.
    fn expected_row(&self, age_std: f64, probs: [f64; 4]) -> Vec<f64> {
        let mut row = vec![1.0, age_std];
        if self.with_density {
            for (k, class) in INDICATOR_CLASSES.iter().enumerate() {
                if self.active[k] {
                    row.push(probs[class.index()]);
                }
            }
        }
        row
    }
}

fn fit_fold_model(
    rows: &[RiskCohortRow],
    train_idx: &[usize],
    age_std: &AgeStandardization,
    source: DensitySource,
    draws_per_woman: usize,
    seed: u64,
    fold: usize,
) -> Result<(RiskModel, DesignSpec), RiskError> {
    let mut design = Vec::new();
    let mut outcomes = Vec::new();
    let mut densities = Vec::new();
    for &i in train_idx {
        let row = &rows[i];
        let age = age_std.apply(row.age);
        match source {
            DensitySource::AgeOnly => {
                densities.push((age, row.clinical, row.outcome));
            }
            DensitySource::Clinical => {
                densities.push((age, row.clinical, row.outcome));
            }
            DensitySource::Predicted => {
                let dist = row.predicted.as_ref().expect("checked above");
                let draw_seed =
                    derive_seed(seed, fold as u64 ^ crate::stats::fnv1a64(row.patient_id.as_bytes()));
                for density in simulate_density_draws(dist, draws_per_woman, draw_seed) {
                    densities.push((age, density, row.outcome));
                }
            }
        }
    }
    let spec = match source {
        DensitySource::AgeOnly => DesignSpec::age_only(),
        _ => DesignSpec::for_training(densities.iter().map(|(_, d, _)| *d)),
    };
    for (age, density, outcome) in densities {
        design.push(spec.row(age, density));
        outcomes.push(outcome);
    }
    let model = fit_logistic(&design, &outcomes, &spec.names())?;
    Ok((model, spec))
}

fn score_design(
    row: &RiskCohortRow,
    age_std: &AgeStandardization,
    source: DensitySource,
    spec: &DesignSpec,
) -> Vec<f64> {
    let age = age_std.apply(row.age);
    match source {
        DensitySource::AgeOnly => spec.row(age, row.clinical),
        DensitySource::Clinical => spec.row(age, row.clinical),
        DensitySource::Predicted => {
            let p = row.predicted.as_ref().expect("checked above").probabilities();
            spec.expected_row(age, p)
        }
    }
}

/// Odds-ratio model fit on all women at once; with the predicted source a
/// single density is drawn per woman.
pub fn risk_odds_ratio_model(
    rows: &[RiskCohortRow],
    source: DensitySource,
    seed: u64,
) -> Result<RiskModel, RiskError> {
    if rows.is_empty() {
        return Err(RiskError::EmptyInput);
    }
    if source == DensitySource::Predicted {
        if let Some(row) = rows.iter().find(|r| r.predicted.is_none()) {
            return Err(RiskError::MissingPrediction(row.patient_id.clone()));
        }
    }
    let ages: Vec<f64> = rows.iter().map(|r| r.age).collect();
    let (_, age_std) = standardize_age(&ages)?;

    let mut design_rows = Vec::with_capacity(rows.len());
    for row in rows {
        let density = match source {
            DensitySource::Clinical | DensitySource::AgeOnly => row.clinical,
            DensitySource::Predicted => {
                let dist = row.predicted.as_ref().expect("checked above");
                let draw_seed = derive_seed(seed, crate::stats::fnv1a64(row.patient_id.as_bytes()));
                simulate_density_draws(dist, 1, draw_seed)[0]
            }
        };
        design_rows.push((age_std.apply(row.age), density, row.outcome));
    }
    let spec = match source {
        DensitySource::AgeOnly => DesignSpec::age_only(),
        _ => DesignSpec::for_training(design_rows.iter().map(|(_, d, _)| *d)),
    };
    let design: Vec<Vec<f64>> = design_rows.iter().map(|&(age, d, _)| spec.row(age, d)).collect();
    let outcomes: Vec<bool> = design_rows.iter().map(|&(_, _, o)| o).collect();
    fit_logistic(&design, &outcomes, &spec.names())
}
