//! Prediction of BI-RADS mammographic breast density from clinical breast
//! ultrasound (BUS) images, and its use as a 5-year breast-cancer risk factor.
//!
//! The pipeline runs entirely on CSV and raster-file artifacts:
//!
//! 1. [`cohort`] — patient manifest ingestion, inclusion criteria,
//!    case/control labeling, stratified-by-woman splitting, and
//!    case-control matching.
//! 2. [`imaging`] — grayscale image loading, invalid-scan rejection,
//!    dual-view splitting, and crop/resize/normalize preprocessing.
//! 3. [`features`] — 16-bin gray-level histogram feature vectors.
//! 4. [`classifiers`] — from-scratch multinomial logistic regression,
//!    random forest, and MLP mapping histogram features to a density
//!    distribution.
//! 5. [`evaluation`] — patient-level aggregation, one-vs-rest and
//!    micro-averaged AUROC with DeLong confidence intervals, and
//!    Kendall tau-b agreement.
//! 6. [`risk`] — age-adjusted logistic cancer-risk models with Wald
//!    odds-ratio intervals and grouped cross-validated AUROC.
//! 7. [`synth`] — deterministic synthetic cohorts with planted density
//!    signal so every stage is verifiable at desk scale.
//!
//! Per-image predictions produced elsewhere (e.g. by a deep model) can be
//! ingested through the prediction CSV schema in [`artifacts`] and flow
//! through aggregation, evaluation, and risk modeling unchanged.

pub mod artifacts;
pub mod classifiers;
pub mod cohort;
pub mod density;
pub mod evaluation;
pub mod features;
pub mod imaging;
pub mod risk;
pub mod stats;
pub mod synth;

pub use density::{Density, DensityDistribution};
