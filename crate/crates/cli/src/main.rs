//! Command-line front end chaining the BUS density pipeline:
//! synth -> clean -> featurize -> split -> match -> train -> predict ->
//! aggregate -> evaluate -> risk. Every stage is driven by one JSON config
//! file and reads/writes CSV artifacts under the configured output
//! directory. Exit codes: 0 success, 1 validation error, 2 runtime error.

mod config;
mod stages;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use busdensity::cohort::Split;
use busdensity::evaluation::EvalLevel;
use busdensity::risk::DensitySource;

use config::RunConfig;

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration, missing inputs, or invalid data: exit code 1.
    Validation(String),
    /// Unexpected failures (filesystem, internal): exit code 2.
    Runtime(String),
}

#[derive(Args, Debug)]
struct Common {
    /// Run configuration JSON file
    #[arg(long)]
    config: PathBuf,
    /// Override the config seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> Result<RunConfig, CliError> {
        RunConfig::load(&self.config, self.seed, self.out.clone())
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, Default)]
enum LevelArg {
    Image,
    #[default]
    Patient,
}

#[derive(ValueEnum, Clone, Copy, Debug, Default)]
enum SourceArg {
    #[default]
    All,
    Clinical,
    Predicted,
    AgeOnly,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum SplitArg {
    Train,
    Validation,
    Test,
}

#[derive(Parser, Debug)]
#[command(
    name = "busdensity",
    version,
    about = "BI-RADS breast density from breast ultrasound: cleaning, histogram features, classifiers, evaluation, and 5-year risk models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic cohort: images, manifest, and latent truth file
    Synth(Common),
    /// Remove invalid scans and split dual-view scans
    Clean(Common),
    /// Compute 16-bin gray-level histogram features for cleaned images
    Featurize(Common),
    /// Apply inclusion criteria and split women into train/validation(/test)
    Split(Common),
    /// Label cases/controls and match controls to cases by year
    Match(Common),
    /// Train the configured classifier on the training split
    Train(Common),
    /// Predict density distributions for every feature row
    Predict(Common),
    /// Aggregate per-image predictions to patient level
    Aggregate {
        #[command(flatten)]
        common: Common,
        /// External per-image prediction CSV (image_id,patient_id,pA..pD)
        #[arg(long)]
        predictions: Option<PathBuf>,
    },
    /// Compute AUROCs with DeLong intervals and tau-b agreement
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t)]
        level: LevelArg,
        /// Restrict to one split (requires splits.csv)
        #[arg(long, value_enum)]
        split: Option<SplitArg>,
        /// Subgroup tags to break out: age_bin, bus_birads, outcome
        #[arg(long, value_delimiter = ',')]
        subgroups: Vec<String>,
        /// External per-image prediction CSV instead of predictions.csv
        #[arg(long)]
        predictions: Option<PathBuf>,
    },
    /// Fit 5-year risk models on the matched set and report OR/AUROC
    Risk {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t)]
        density_source: SourceArg,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Synth(c) => stages::run_synth(&c.load()?),
        Command::Clean(c) => stages::run_clean(&c.load()?),
        Command::Featurize(c) => stages::run_featurize(&c.load()?),
        Command::Split(c) => stages::run_split(&c.load()?),
        Command::Match(c) => stages::run_match(&c.load()?),
        Command::Train(c) => stages::run_train(&c.load()?),
        Command::Predict(c) => stages::run_predict(&c.load()?),
        Command::Aggregate { common, predictions } => {
            stages::run_aggregate(&common.load()?, predictions)
        }
        Command::Evaluate {
            common,
            level,
            split,
            subgroups,
            predictions,
        } => {
            let level = match level {
                LevelArg::Image => EvalLevel::Image,
                LevelArg::Patient => EvalLevel::Patient,
            };
            let split = split.map(|s| match s {
                SplitArg::Train => Split::Train,
                SplitArg::Validation => Split::Validation,
                SplitArg::Test => Split::Test,
            });
            stages::run_evaluate(&common.load()?, level, split, &subgroups, predictions)
        }
        Command::Risk {
            common,
            density_source,
        } => {
            let source = match density_source {
                SourceArg::All => None,
                SourceArg::Clinical => Some(DensitySource::Clinical),
                SourceArg::Predicted => Some(DensitySource::Predicted),
                SourceArg::AgeOnly => Some(DensitySource::AgeOnly),
            };
            stages::run_risk(&common.load()?, source)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    ExitCode::SUCCESS
                }
                _ => {
                    eprint!("{e}");
                    ExitCode::from(1)
                }
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(msg)) => {
            eprintln!("validation error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("runtime error: {msg}");
            ExitCode::from(2)
        }
    }
}
