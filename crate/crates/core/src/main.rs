use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use nbspectrum::config::RunConfig;
use nbspectrum::pipeline::{self, PipelineError};
use nbspectrum::scoring::{CvSplit, FeatureSet};

#[derive(Parser)]
#[command(name = "nbspectrum", version, about = "Exploration/explanation scoring for Jupyter notebooks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score a single notebook file.
    Score {
        file: PathBuf,
        /// Bundled model name or path to a model JSON file.
        #[arg(long, short, default_value = "hybrid")]
        model: String,
        #[arg(long, short)]
        config: Option<PathBuf>,
    },
    /// Evaluate the inclusion criteria for one notebook in a repository.
    Filter {
        repo: PathBuf,
        path: String,
        #[arg(long, short)]
        config: Option<PathBuf>,
        /// Owner name or email; overrides the config.
        #[arg(long)]
        owner: Option<String>,
        #[arg(long)]
        branch: Option<String>,
    },
    /// Mine every notebook under the configured corpus roots.
    Analyze {
        #[arg(long, short)]
        config: Option<PathBuf>,
        #[arg(long, short)]
        workers: Option<usize>,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Fit and cross-validate a model from a labeled CSV.
    Train {
        labeled_csv: PathBuf,
        #[arg(long, short, value_parser = parse_feature_set)]
        features: FeatureSet,
        #[arg(long, short)]
        seed: Option<u64>,
        #[arg(long, short)]
        config: Option<PathBuf>,
        /// Train on 80% per fold instead of 20%.
        #[arg(long)]
        conventional_split: bool,
        #[arg(long, short, default_value = ".")]
        output: PathBuf,
    },
}

fn parse_feature_set(s: &str) -> Result<FeatureSet, String> {
    s.parse()
}

fn config(path: Option<&PathBuf>) -> Result<RunConfig, PipelineError> {
    RunConfig::resolve(path.map(PathBuf::as_path)).map_err(PipelineError::Input)
}

fn print_json<T: Serialize>(value: &T) -> Result<(), PipelineError> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| PipelineError::Internal(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    match cli.command {
        Command::Score { file, model, config: cfg } => {
            let cfg = config(cfg.as_ref())?;
            let model = pipeline::resolve_model(&model)?;
            let record = pipeline::score_file(&file, &model, cfg.comment_density)?;
            print_json(&record)
        }
        Command::Filter { repo, path, config: cfg, owner, branch } => {
            let mut cfg = config(cfg.as_ref())?;
            if let Some(b) = branch {
                cfg.branch = b;
            }
            let (_, report) = pipeline::filter_notebook(&repo, &path, &cfg, owner.as_deref())?;
            print_json(&report)
        }
        Command::Analyze { config: cfg, workers, output } => {
            let mut cfg = config(cfg.as_ref())?;
            if let Some(w) = workers {
                cfg.workers = w;
            }
            if let Some(o) = output {
                cfg.output_dir = o;
            }
            if cfg.corpus_roots.is_empty() {
                log::warn!("no corpus roots configured");
            }
            let summary = pipeline::analyze(&cfg)?;
            eprintln!(
                "{} notebooks, {} accepted, {} fitted; results in {}",
                summary.notebooks,
                summary.accepted,
                summary.fitted,
                summary.output_dir.display()
            );
            Ok(())
        }
        Command::Train { labeled_csv, features, seed, config: cfg, conventional_split, output } => {
            let cfg = config(cfg.as_ref())?;
            let split = if conventional_split { CvSplit::TrainOnRest } else { cfg.cv_split };
            let outcome = pipeline::train(&labeled_csv, features, seed.unwrap_or(cfg.seed), split, &output)?;
            print_json(&outcome)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
