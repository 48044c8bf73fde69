//! Pipeline stage implementations. Each stage reads its predecessors' CSV
//! artifacts from the output directory, writes its own artifacts plus a
//! run-metadata JSON, and nothing else, so any stage can be rerun in
//! isolation and reproduce its outputs byte-identically.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use busdensity::artifacts::{self, CleaningLogRow, FeatureRecord, PatientPrediction, StageMeta};
use busdensity::classifiers::{
    io::training_digest, load_model, save_model, train_forest, train_logreg, train_mlp,
    DensityClassifier, FeatureRow, ModelFile, ModelPayload,
};
use busdensity::cohort::{
    apply_inclusion_criteria, ingest_cohort, label_cases_controls, match_case_control,
    stratified_split, Cohort, Outcome, Split,
};
use busdensity::density::Density;
use busdensity::evaluation::{
    aggregate_mean, aggregate_vote_round, evaluate, roc_points, EvalLevel, PredictionRow,
    PredictionSet, RocPoint,
};
use busdensity::features::gray_level_histogram;
use busdensity::imaging::{detect_invalid, load_image, save_png, split_dual_view, CleaningStatus};
use busdensity::risk::{
    cv_risk_auroc, odds_ratios, risk_odds_ratio_model, DensitySource, RiskCohortRow,
};
use busdensity::stats::{configured_threads, derive_seed_str, parallel_map};
use busdensity::synth::generate_cohort;

use crate::config::{ModelConfig, RunConfig};
use crate::CliError;

fn require_input(path: &Path, produced_by: &str) -> Result<(), CliError> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::Validation(format!(
            "missing input {} (produced by the {produced_by} stage)",
            path.display()
        )))
    }
}

fn ensure_out_dir(cfg: &RunConfig) -> Result<(), CliError> {
    std::fs::create_dir_all(&cfg.out_dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", cfg.out_dir.display())))
}

fn write_meta(
    cfg: &RunConfig,
    stage: &str,
    inputs: &[&str],
    outputs: &[&str],
    warnings: Vec<String>,
) -> Result<(), CliError> {
    let meta = StageMeta {
        stage: stage.to_string(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: cfg.seed,
        config_digest: cfg.digest(),
        inputs: inputs.iter().map(|s| s.to_string()).collect(),
        outputs: outputs.iter().map(|s| s.to_string()).collect(),
        warnings,
    };
    artifacts::write_stage_meta(&meta, &cfg.path(&format!("{stage}_meta.json")))?;
    Ok(())
}

fn ingest(manifest: &Path) -> Result<busdensity::cohort::IngestReport, CliError> {
    require_input(manifest, "synth (or an external manifest)")?;
    Ok(ingest_cohort(manifest)?)
}

// -------------------------------------------------------------------- synth

pub fn run_synth(cfg: &RunConfig) -> Result<(), CliError> {
    ensure_out_dir(cfg)?;
    let mut synth_cfg = cfg.synth.clone();
    synth_cfg.seed = cfg.seed;
    let out = generate_cohort(&synth_cfg).map_err(|e| CliError::Validation(e.to_string()))?;

    let images_dir = cfg.path("images");
    std::fs::create_dir_all(&images_dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", images_dir.display())))?;
    for img in &out.images {
        save_png(img, &images_dir.join(format!("{}.png", img.image_id)))?;
    }
    artifacts::write_manifest(&out.cohort, Some("images"), &cfg.path("manifest.csv"))?;
    artifacts::write_truth(&out.truth, &cfg.path("truth.csv"))?;

    write_meta(
        cfg,
        "synth",
        &[],
        &["manifest.csv", "truth.csv", "images/"],
        vec![],
    )?;
    println!(
        "synth: {} women, {} images",
        out.cohort.len(),
        out.images.len()
    );
    Ok(())
}

// -------------------------------------------------------------------- clean

fn image_file(dir: &Path, image_id: &str) -> Result<PathBuf, CliError> {
    for ext in ["png", "pgm"] {
        let candidate = dir.join(format!("{image_id}.{ext}"));
        if candidate.exists() {
            return Ok(candidate);
        }
    }
    Err(CliError::Validation(format!(
        "image {image_id} not found under {}",
        dir.display()
    )))
}

pub fn run_clean(cfg: &RunConfig) -> Result<(), CliError> {
    ensure_out_dir(cfg)?;
    let manifest = cfg.manifest_path();
    let report = ingest(&manifest)?;

    let cleaned_dir = cfg.path("cleaned");
    std::fs::create_dir_all(&cleaned_dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", cleaned_dir.display())))?;

    let mut log = Vec::new();
    let mut kept = 0usize;
    for record in report.cohort.records() {
        let Some(image_dir) = record.image_dir.as_deref() else {
            continue;
        };
        for image_id in &record.image_ids {
            let img = load_image(&image_file(image_dir, image_id)?)?;
            let verdict = detect_invalid(&img, &cfg.cleaning);
            if verdict.status == CleaningStatus::Invalid {
                log.push(CleaningLogRow {
                    image_id: image_id.clone(),
                    status: CleaningStatus::Invalid,
                    reason: verdict.reason,
                    output_ids: vec![],
                });
                continue;
            }
            let verdict = split_dual_view(img, &cfg.cleaning);
            let mut output_ids = Vec::new();
            for sub in &verdict.sub_images {
                save_png(sub, &cleaned_dir.join(format!("{}.png", sub.image_id)))?;
                output_ids.push(sub.image_id.clone());
                kept += 1;
            }
            log.push(CleaningLogRow {
                image_id: image_id.clone(),
                status: verdict.status,
                reason: verdict.reason,
                output_ids,
            });
        }
    }
    artifacts::write_cleaning_log(&log, &cfg.path("cleaning_log.csv"))?;

    let invalid = log.iter().filter(|r| r.status == CleaningStatus::Invalid).count();
    let dual = log.iter().filter(|r| r.status == CleaningStatus::DualView).count();
    write_meta(
        cfg,
        "clean",
        &["manifest.csv", "images/"],
        &["cleaning_log.csv", "cleaned/"],
        vec![],
    )?;
    println!("clean: {kept} images kept ({invalid} invalid, {dual} dual-view splits)");
    Ok(())
}

// ---------------------------------------------------------------- featurize

pub fn run_featurize(cfg: &RunConfig) -> Result<(), CliError> {
    let cleaned_dir = cfg.path("cleaned");
    require_input(&cleaned_dir, "clean")?;

    let mut files: Vec<PathBuf> = std::fs::read_dir(&cleaned_dir)
        .map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", cleaned_dir.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "png"))
        .collect();
    files.sort();

    let normalize = cfg.normalize_features;
    let results: Vec<Result<FeatureRecord, String>> =
        parallel_map(files.len(), configured_threads(), |i| {
            let img = load_image(&files[i]).map_err(|e| e.to_string())?;
            Ok(FeatureRecord {
                image_id: img.image_id.clone(),
                patient_id: img.patient_id.clone(),
                features: gray_level_histogram(&img, normalize),
            })
        });
    let mut rows = Vec::with_capacity(results.len());
    for r in results {
        rows.push(r.map_err(CliError::Validation)?);
    }
    artifacts::write_features(&rows, &cfg.path("features.csv"))?;

    write_meta(cfg, "featurize", &["cleaned/"], &["features.csv"], vec![])?;
    println!("featurize: {} rows", rows.len());
    Ok(())
}

// -------------------------------------------------------------------- split

pub fn run_split(cfg: &RunConfig) -> Result<(), CliError> {
    ensure_out_dir(cfg)?;
    let report = ingest(&cfg.manifest_path())?;
    artifacts::write_rejections(&report.rejections, &cfg.path("rejections.csv"))?;

    let (included, exclusions) = apply_inclusion_criteria(&report.cohort);
    artifacts::write_exclusions(&exclusions, &cfg.path("exclusions.csv"))?;

    let split = stratified_split(
        &included,
        &cfg.split_fractions,
        derive_seed_str(cfg.seed, "split"),
    )?;
    artifacts::write_splits(&split, &cfg.path("splits.csv"))?;

    let excluded: usize = exclusions.counts.iter().map(|(_, c)| c).sum();
    write_meta(
        cfg,
        "split",
        &["manifest.csv"],
        &["rejections.csv", "exclusions.csv", "splits.csv"],
        split.warnings.clone(),
    )?;
    println!(
        "split: {} included ({} excluded, {} rejected rows)",
        included.len(),
        excluded,
        report.rejections.len()
    );
    Ok(())
}

// -------------------------------------------------------------------- match

pub fn run_match(cfg: &RunConfig) -> Result<(), CliError> {
    ensure_out_dir(cfg)?;
    let report = ingest(&cfg.manifest_path())?;
    let (included, _) = apply_inclusion_criteria(&report.cohort);
    let (labeled, summary) = label_cases_controls(&included);
    artifacts::write_labels(&labeled, &cfg.path("labels.csv"))?;

    let matched = match_case_control(
        &labeled,
        cfg.matching.ratio,
        cfg.matching.key,
        derive_seed_str(cfg.seed, "match"),
    )?;
    artifacts::write_matched(&matched, &cfg.path("matched.csv"))?;

    let mut warnings = matched.warnings.clone();
    warnings.extend(
        summary
            .inconsistent
            .iter()
            .map(|id| format!("diagnosis precedes BUS exam for {id}")),
    );
    write_meta(
        cfg,
        "match",
        &["manifest.csv"],
        &["labels.csv", "matched.csv"],
        warnings,
    )?;
    println!(
        "match: {} cases, {} controls matched ({} undetermined excluded)",
        matched.n_cases(),
        matched.n_controls(),
        summary.undetermined
    );
    Ok(())
}

// -------------------------------------------------------------------- train

fn labeled_features(
    features: &[FeatureRecord],
    splits: &BTreeMap<String, Split>,
    cohort: &Cohort,
    split: Split,
) -> Result<(Vec<FeatureRow>, Vec<Density>), CliError> {
    let mut x = Vec::new();
    let mut y = Vec::new();
    for row in features {
        if splits.get(&row.patient_id) != Some(&split) {
            continue;
        }
        let record = cohort.get(&row.patient_id).ok_or_else(|| {
            CliError::Validation(format!("patient {} not in manifest", row.patient_id))
        })?;
        x.push(row.features.bins);
        y.push(record.clinical_density);
    }
    Ok((x, y))
}

pub fn run_train(cfg: &RunConfig) -> Result<(), CliError> {
    let features_path = cfg.path("features.csv");
    let splits_path = cfg.path("splits.csv");
    require_input(&features_path, "featurize")?;
    require_input(&splits_path, "split")?;
    let report = ingest(&cfg.manifest_path())?;

    let features = artifacts::read_features(&features_path)?;
    let splits = artifacts::read_splits(&splits_path)?;
    let (x, y) = labeled_features(&features, &splits, &report.cohort, Split::Train)?;
    if x.is_empty() {
        return Err(CliError::Validation("training split has no feature rows".into()));
    }

    let train_seed = derive_seed_str(cfg.seed, "train");
    let payload = match &cfg.model {
        ModelConfig::Logreg(c) => {
            let (model, trace) = train_logreg(&x, &y, c)?;
            println!(
                "train: logreg, {} iterations, converged = {}",
                trace.iterations, trace.converged
            );
            ModelPayload::Logreg(model)
        }
        ModelConfig::Forest(c) => {
            let mut c = *c;
            c.seed = train_seed;
            let model = train_forest(&x, &y, &c)?;
            println!("train: forest, {} trees", c.n_trees);
            ModelPayload::Forest(model)
        }
        ModelConfig::Mlp(c) => {
            let (xv, yv) = labeled_features(&features, &splits, &report.cohort, Split::Validation)?;
            let mut c = *c;
            c.seed = train_seed;
            let (model, trace) = train_mlp(&x, &y, &xv, &yv, &c)?;
            println!(
                "train: mlp, best epoch {}, early stop = {}",
                trace.best_epoch, trace.stopped_early
            );
            ModelPayload::Mlp(model)
        }
    };

    let file = ModelFile::new(payload, train_seed, training_digest(&x, &y));
    save_model(&file, &cfg.path("model.json"))?;
    write_meta(
        cfg,
        "train",
        &["features.csv", "splits.csv", "manifest.csv"],
        &["model.json"],
        vec![],
    )?;
    Ok(())
}

// ------------------------------------------------------------------ predict

pub fn run_predict(cfg: &RunConfig) -> Result<(), CliError> {
    let model_path = cfg.path("model.json");
    let features_path = cfg.path("features.csv");
    require_input(&model_path, "train")?;
    require_input(&features_path, "featurize")?;

    let model = load_model(&model_path)?;
    let features = artifacts::read_features(&features_path)?;
    let rows: Vec<PredictionRow> = features
        .iter()
        .map(|f| PredictionRow {
            image_id: f.image_id.clone(),
            patient_id: f.patient_id.clone(),
            dist: model.payload.predict_proba(&f.features.bins),
        })
        .collect();
    artifacts::write_predictions(&rows, &cfg.path("predictions.csv"))?;

    write_meta(
        cfg,
        "predict",
        &["model.json", "features.csv"],
        &["predictions.csv"],
        vec![],
    )?;
    println!("predict: {} rows", rows.len());
    Ok(())
}

// ---------------------------------------------------------------- aggregate

pub fn run_aggregate(cfg: &RunConfig, predictions: Option<PathBuf>) -> Result<(), CliError> {
    ensure_out_dir(cfg)?;
    let preds_path = predictions.unwrap_or_else(|| cfg.path("predictions.csv"));
    require_input(&preds_path, "predict (or an external prediction file)")?;
    let rows = artifacts::read_predictions(&preds_path)?;
    if rows.is_empty() {
        return Err(CliError::Validation("prediction file has no rows".into()));
    }

    let mut by_patient: BTreeMap<String, Vec<busdensity::density::DensityDistribution>> =
        BTreeMap::new();
    for row in &rows {
        by_patient.entry(row.patient_id.clone()).or_default().push(row.dist);
    }
    let mut out = Vec::with_capacity(by_patient.len());
    for (patient_id, dists) in by_patient {
        out.push(PatientPrediction {
            patient_id,
            n_images: dists.len(),
            dist: aggregate_mean(&dists).expect("group is non-empty"),
            vote: aggregate_vote_round(&dists).expect("group is non-empty"),
        });
    }
    artifacts::write_patient_predictions(&out, &cfg.path("patient_predictions.csv"))?;

    write_meta(
        cfg,
        "aggregate",
        &["predictions.csv"],
        &["patient_predictions.csv"],
        vec![],
    )?;
    println!("aggregate: {} patients", out.len());
    Ok(())
}

// ----------------------------------------------------------------- evaluate

fn age_bin(age: i32) -> &'static str {
    if age < 50 {
        "<50"
    } else if age < 65 {
        "50-64"
    } else {
        ">=65"
    }
}

pub fn run_evaluate(
    cfg: &RunConfig,
    level: EvalLevel,
    split_filter: Option<Split>,
    subgroups: &[String],
    predictions: Option<PathBuf>,
) -> Result<(), CliError> {
    let external = predictions.is_some();
    let preds_path = predictions.unwrap_or_else(|| cfg.path("predictions.csv"));
    require_input(&preds_path, "predict (or an external prediction file)")?;
    let report = ingest(&cfg.manifest_path())?;

    let mut rows = artifacts::read_predictions(&preds_path)?;
    if let Some(split) = split_filter {
        let splits_path = cfg.path("splits.csv");
        require_input(&splits_path, "split")?;
        let splits = artifacts::read_splits(&splits_path)?;
        rows.retain(|r| splits.get(&r.patient_id) == Some(&split));
    }
    if rows.is_empty() {
        return Err(CliError::Validation("no prediction rows to evaluate".into()));
    }

    let (labeled, _) = label_cases_controls(&report.cohort);
    let mut truth = BTreeMap::new();
    let mut tag_age = BTreeMap::new();
    let mut tag_birads = BTreeMap::new();
    let mut tag_outcome = BTreeMap::new();
    for r in labeled.records() {
        truth.insert(r.patient_id.clone(), r.clinical_density);
        tag_age.insert(r.patient_id.clone(), age_bin(r.age_at_bus()).to_string());
        tag_birads.insert(r.patient_id.clone(), r.bus_birads.to_string());
        tag_outcome.insert(r.patient_id.clone(), r.outcome.to_string());
    }

    let mut set = PredictionSet::new(rows.clone(), truth.clone())?;
    set.add_tag("age_bin", tag_age);
    set.add_tag("bus_birads", tag_birads);
    set.add_tag("outcome", tag_outcome);

    let eval = evaluate(&set, level, subgroups)?;

    // instance-level scores for the ROC point export
    let instances: Vec<([f64; 4], Density)> = match level {
        EvalLevel::Image => rows
            .iter()
            .map(|r| (r.dist.probabilities(), truth[&r.patient_id]))
            .collect(),
        EvalLevel::Patient => {
            let mut by_patient: BTreeMap<&str, Vec<busdensity::density::DensityDistribution>> =
                BTreeMap::new();
            for r in &rows {
                by_patient.entry(r.patient_id.as_str()).or_default().push(r.dist);
            }
            by_patient
                .iter()
                .map(|(pid, dists)| {
                    (aggregate_mean(dists).expect("non-empty").probabilities(), truth[*pid])
                })
                .collect()
        }
    };
    let mut curves: Vec<(String, Vec<RocPoint>)> = Vec::new();
    for class in busdensity::density::DENSITY_CLASSES {
        let scores: Vec<f64> = instances.iter().map(|(p, _)| p[class.index()]).collect();
        let labels: Vec<bool> = instances.iter().map(|(_, t)| *t == class).collect();
        if let Ok(points) = roc_points(&scores, &labels) {
            curves.push((format!("ovr_{}", class.as_str().to_lowercase()), points));
        }
    }
    {
        let scores: Vec<f64> = instances.iter().map(|(p, _)| p[2] + p[3]).collect();
        let labels: Vec<bool> = instances.iter().map(|(_, t)| t.is_dense()).collect();
        if let Ok(points) = roc_points(&scores, &labels) {
            curves.push(("dense_vs_nondense".to_string(), points));
        }
    }

    let model_name = if external { "external" } else { cfg.model.kind_str() };
    let suffix = level.to_string();
    artifacts::write_eval_json(&eval, &cfg.path(&format!("eval_{suffix}.json")))?;
    artifacts::write_eval_table(&eval, model_name, &cfg.path(&format!("eval_table_{suffix}.csv")))?;
    artifacts::write_roc_points(&curves, &cfg.path(&format!("roc_{suffix}.csv")))?;

    write_meta(
        cfg,
        &format!("evaluate_{suffix}"),
        &["predictions.csv", "manifest.csv"],
        &[
            &format!("eval_{suffix}.json"),
            &format!("eval_table_{suffix}.csv"),
            &format!("roc_{suffix}.csv"),
        ],
        vec![],
    )?;

    let micro = eval.overall.micro.expect("non-degenerate overall");
    match micro.ci {
        Some((lo, hi)) => println!(
            "evaluate[{suffix}]: micro AUROC {:.4} ({:.4}, {:.4}) over {} instances",
            micro.auc, lo, hi, eval.overall.n_instances
        ),
        None => println!(
            "evaluate[{suffix}]: micro AUROC {:.4} over {} instances",
            micro.auc, eval.overall.n_instances
        ),
    }
    Ok(())
}

// --------------------------------------------------------------------- risk

pub fn run_risk(cfg: &RunConfig, source: Option<DensitySource>) -> Result<(), CliError> {
    let matched_path = cfg.path("matched.csv");
    require_input(&matched_path, "match")?;
    let report = ingest(&cfg.manifest_path())?;
    let (included, _) = apply_inclusion_criteria(&report.cohort);
    let (labeled, _) = label_cases_controls(&included);

    let sources = match source {
        Some(s) => vec![s],
        None => vec![
            DensitySource::Clinical,
            DensitySource::Predicted,
            DensitySource::AgeOnly,
        ],
    };
    let needs_predictions = sources.contains(&DensitySource::Predicted);

    let matched = artifacts::read_matched(&matched_path)?;
    if matched.is_empty() {
        return Err(CliError::Validation("matched set is empty; nothing to model".into()));
    }
    let mut women: BTreeSet<String> = BTreeSet::new();
    for pair in &matched {
        women.insert(pair.case_id.clone());
        women.insert(pair.control_id.clone());
    }

    let predicted: BTreeMap<String, busdensity::density::DensityDistribution> =
        if needs_predictions {
            let preds_path = cfg.path("patient_predictions.csv");
            require_input(&preds_path, "aggregate")?;
            artifacts::read_patient_predictions(&preds_path)?
                .into_iter()
                .map(|p| (p.patient_id, p.dist))
                .collect()
        } else {
            BTreeMap::new()
        };

    let mut warnings = Vec::new();
    let mut rows = Vec::new();
    for id in &women {
        let record = labeled.get(id).ok_or_else(|| {
            CliError::Validation(format!("matched woman {id} not in the included cohort"))
        })?;
        let outcome = match record.outcome {
            Outcome::Case => true,
            Outcome::Control => false,
            Outcome::Undetermined => {
                return Err(CliError::Validation(format!(
                    "matched woman {id} has undetermined outcome"
                )))
            }
        };
        let dist = predicted.get(id).copied();
        if needs_predictions && dist.is_none() {
            warnings.push(format!("{id} lacks a predicted density; dropped from risk models"));
            continue;
        }
        rows.push(RiskCohortRow {
            patient_id: id.clone(),
            age: record.age_at_bus() as f64,
            outcome,
            clinical: record.clinical_density,
            predicted: dist,
        });
    }
    if rows.is_empty() {
        return Err(CliError::Validation("no matched women with usable inputs".into()));
    }

    let cv_seed = derive_seed_str(cfg.seed, "risk_cv");
    let or_seed = derive_seed_str(cfg.seed, "risk_or");
    let mut source_reports = BTreeMap::new();
    for s in &sources {
        let auroc = cv_risk_auroc(&rows, cfg.risk_folds, cv_seed, *s, cfg.risk_draws)?;
        let or_rows = match s {
            DensitySource::AgeOnly => vec![],
            _ => {
                let model = risk_odds_ratio_model(&rows, *s, or_seed)?;
                odds_ratios(&model, 0.05)
            }
        };
        println!(
            "risk[{s}]: AUROC {:.4} ({:.4}, {:.4}) over {} women",
            auroc.auc, auroc.lower, auroc.upper, auroc.n_women
        );
        source_reports.insert(
            s.to_string(),
            artifacts::RiskSourceReport {
                auroc,
                odds_ratios: or_rows,
            },
        );
    }

    let n_cases = rows.iter().filter(|r| r.outcome).count();
    let risk_report = artifacts::RiskReport {
        n_women: rows.len(),
        n_cases,
        n_controls: rows.len() - n_cases,
        folds: cfg.risk_folds,
        draws_per_woman: cfg.risk_draws,
        seed: cfg.seed,
        sources: source_reports,
    };
    artifacts::write_risk_json(&risk_report, &cfg.path("risk.json"))?;
    artifacts::write_risk_or_table(&risk_report, &cfg.path("risk_or.csv"))?;

    write_meta(
        cfg,
        "risk",
        &["manifest.csv", "matched.csv", "patient_predictions.csv"],
        &["risk.json", "risk_or.csv"],
        warnings,
    )?;
    Ok(())
}

// --------------------------------------------------------- error conversions

impl From<busdensity::artifacts::ArtifactError> for CliError {
    fn from(e: busdensity::artifacts::ArtifactError) -> Self {
        use busdensity::artifacts::ArtifactError::*;
        match e {
            Schema { .. } | BadValue { .. } => CliError::Validation(e.to_string()),
            Io { .. } | Csv(_) => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<busdensity::cohort::CohortError> for CliError {
    fn from(e: busdensity::cohort::CohortError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<busdensity::imaging::ImageError> for CliError {
    fn from(e: busdensity::imaging::ImageError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<busdensity::classifiers::TrainError> for CliError {
    fn from(e: busdensity::classifiers::TrainError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<busdensity::classifiers::ModelIoError> for CliError {
    fn from(e: busdensity::classifiers::ModelIoError) -> Self {
        use busdensity::classifiers::ModelIoError::*;
        match e {
            Io { .. } => CliError::Runtime(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<busdensity::evaluation::EvalError> for CliError {
    fn from(e: busdensity::evaluation::EvalError) -> Self {
        CliError::Validation(format!("degenerate labels or invalid evaluation input: {e}"))
    }
}

impl From<busdensity::risk::RiskError> for CliError {
    fn from(e: busdensity::risk::RiskError) -> Self {
        use busdensity::risk::RiskError::*;
        match e {
            NotConverged => CliError::Runtime(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}
