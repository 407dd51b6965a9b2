//! Command-line front end. Exit codes: 0 success, 1 validation error,
//! 2 runtime failure.

pub mod commands;
pub mod config;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{
    cache_stem, cmd_ensemble, cmd_evaluate, cmd_extract, cmd_make_splits, cmd_predict, cmd_train, load_bundle,
    utterance_cache_path, word_cache_path, write_json, EvaluationReport, ExtractReport, SplitOutput, TrainReport,
};
pub use config::{DimOverrides, FeatureFlags, Preset, RunConfig};

use crate::dataio::{DataError, SplitSpec};
use crate::ensemble::{EnsembleError, Strategy};
use crate::features::FeatureError;
use crate::metrics::MetricError;
use crate::neural::NeuralError;
use crate::signal::SignalError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        match e {
            DataError::Io { .. } => CliError::Runtime(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

fn feature_is_io(e: &FeatureError) -> bool {
    match e {
        FeatureError::Signal(SignalError::Io { .. }) | FeatureError::Data(DataError::Io { .. }) => true,
        FeatureError::InSample { source, .. } => feature_is_io(source),
        _ => false,
    }
}

impl From<FeatureError> for CliError {
    fn from(e: FeatureError) -> Self {
        if feature_is_io(&e) {
            CliError::Runtime(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

impl From<NeuralError> for CliError {
    fn from(e: NeuralError) -> Self {
        match e {
            NeuralError::Io { .. } | NeuralError::NonFinite(_) => CliError::Runtime(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<EnsembleError> for CliError {
    fn from(e: EnsembleError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<MetricError> for CliError {
    fn from(e: MetricError) -> Self {
        CliError::Validation(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "mater", version, about = "Multi-level speech emotion recognition toolkit")]
pub struct Cli {
    /// Overrides every seed in the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; affects wall time only.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute word- and utterance-level features into a cache directory.
    Extract(ExtractArgs),
    /// Train a model and write a checkpoint plus a history CSV.
    Train(TrainArgs),
    /// Predict a manifest with a checkpoint.
    Predict(PredictArgs),
    /// Combine categorical prediction files.
    Ensemble(EnsembleArgs),
    /// Score predictions against manifest golds.
    Evaluate(EvaluateArgs),
    /// Draw class-balanced evaluation sets.
    MakeSplits(SplitArgs),
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub cache: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub cache: Option<PathBuf>,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub history: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub cache: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EnsembleArgs {
    /// Categorical prediction CSVs with identical id columns.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// uncertainty, averaging or majority.
    #[arg(long, default_value = "uncertainty")]
    pub strategy: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub predictions: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    /// JSON report path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub sets: usize,
    #[arg(long, default_value_t = 326)]
    pub per_class: usize,
    /// JSON output path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn load_config(path: &Option<PathBuf>) -> Result<RunConfig, CliError> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

fn set_workers(n: Option<usize>) -> Result<(), CliError> {
    if let Some(n) = n {
        if n == 0 {
            return Err(CliError::Validation("workers must be positive".into()));
        }
        // A second call in one process fails harmlessly; the first pool stays.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Runs one parsed invocation.
pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Extract(a) => {
            let mut cfg = load_config(&a.config)?;
            cfg.manifest = a.manifest.or(cfg.manifest);
            cfg.cache = a.cache.or(cfg.cache);
            set_workers(cli.workers.or(cfg.workers))?;
            let manifest = cfg.manifest.clone().ok_or_else(|| CliError::Validation("no manifest given".into()))?;
            let cache = cfg.cache.clone().ok_or_else(|| CliError::Validation("no cache directory given".into()))?;
            let report = cmd_extract(&cfg, &manifest, &cache)?;
            eprintln!("extracted {} samples into {}", report.written, cache.display());
            if report.failures.is_empty() {
                Ok(())
            } else {
                for (id, m) in &report.failures {
                    eprintln!("  {id}: {m}");
                }
                Err(CliError::Runtime(format!("{} sample(s) failed", report.failures.len())))
            }
        }
        Command::Train(a) => {
            let mut cfg = load_config(&a.config)?;
            cfg.manifest = a.manifest.or(cfg.manifest);
            cfg.cache = a.cache.or(cfg.cache);
            cfg.checkpoint = a.checkpoint.or(cfg.checkpoint);
            cfg.history = a.history.or(cfg.history);
            if let Some(e) = a.epochs {
                cfg.train.epochs = e;
            }
            if let Some(lr) = a.learning_rate {
                cfg.train.learning_rate = lr;
            }
            if let Some(b) = a.batch_size {
                cfg.train.batch_size = b;
            }
            if let Some(s) = cli.seed {
                cfg.train.seed = s;
            }
            set_workers(cli.workers.or(cfg.workers))?;
            let r = cmd_train(&cfg)?;
            eprintln!(
                "trained on {} samples ({} without a target skipped); checkpoint {}, history {}",
                r.samples,
                r.skipped,
                r.checkpoint.display(),
                r.history.display()
            );
            Ok(())
        }
        Command::Predict(a) => {
            set_workers(cli.workers)?;
            let f = cmd_predict(&a.checkpoint, &a.manifest, &a.cache, &a.out)?;
            eprintln!("wrote {} predictions to {}", f.ids().len(), a.out.display());
            Ok(())
        }
        Command::Ensemble(a) => {
            let strategy: Strategy = a.strategy.parse()?;
            let r = cmd_ensemble(&a.inputs, strategy, &a.out)?;
            eprintln!("{strategy} ensemble of {} files over {} samples", a.inputs.len(), r.ids.len());
            Ok(())
        }
        Command::Evaluate(a) => write_json(a.out.as_deref(), &cmd_evaluate(&a.predictions, &a.manifest)?),
        Command::MakeSplits(a) => {
            let spec = SplitSpec {
                n_sets: a.sets,
                per_class: a.per_class,
                seed: cli.seed.unwrap_or(0),
            };
            write_json(a.out.as_deref(), &cmd_make_splits(&a.manifest, &spec)?)
        }
    }
}

/// Parses `args`, runs, reports errors on stderr and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_are_validation_failures() {
        assert_eq!(main_with_args(["mater", "no-such-command"]), 1);
        assert_eq!(main_with_args(["mater", "ensemble", "--out", "x.csv"]), 1);
        assert_eq!(main_with_args(["mater", "--help"]), 0);
    }

    #[test]
    fn subcommands_parse() {
        for cmd in ["extract", "train", "predict", "ensemble", "evaluate", "make-splits"] {
            let err = Cli::try_parse_from(["mater", cmd, "--help"]).unwrap_err();
            assert_eq!(err.kind(), clap::error::ErrorKind::DisplayHelp, "{cmd}");
        }
    }
}
