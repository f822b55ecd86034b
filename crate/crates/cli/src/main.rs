//! `embviz`: featurize tables, render query plots and evaluate a
//! vision-language model (or the offline mock) on embedding datasets.
//!
//! Exit codes: 0 success, 1 output could not be written, 2 invalid input or
//! configuration, 3 evaluation finished but incomplete.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use embviz_core::data::TaskKind;
use embviz_vlm::PromptMode;
use thiserror::Error;

use config::{Overrides, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Io(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "embviz",
    version,
    about = "Visualize embeddings and ask a vision-language model to classify them"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Encode a typed CSV into a dataset manifest and embedding payload
    Featurize(FeaturizeArgs),
    /// Render one zoomed plot and legend sidecar per query, without any model
    Visualize(RunArgs),
    /// Run the full pipeline and write an evaluation report
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    #[value(name = "basic_tsne")]
    BasicTsne,
    #[value(name = "tsne_knn")]
    TsneKnn,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TaskArg {
    Classification,
    Regression,
}

#[derive(Debug, Args)]
struct FeaturizeArgs {
    /// CSV with a header row and a `#types:` line
    csv: PathBuf,
    /// TOML or JSON run configuration
    #[arg(long)]
    config: Option<PathBuf>,
    /// Manifest path to write [default: <config out>/manifest.json]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Column holding the target
    #[arg(long)]
    label_column: Option<String>,
    /// Column holding row ids
    #[arg(long)]
    id_column: Option<String>,
    /// Target type [default: classification]
    #[arg(long, value_enum)]
    task: Option<TaskArg>,
    /// Fraction of labeled rows assigned to the query split
    #[arg(long)]
    query_fraction: Option<f64>,
    /// Seed for the train/query split
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// TOML or JSON run configuration
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset manifest (overrides `dataset` in the config)
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Zoom factor around the query and its neighbors (>= 1)
    #[arg(long)]
    zoom_scale: Option<f64>,
    /// Number of neighbors [default: min(30, ceil(n_train / 10))]
    #[arg(long)]
    k: Option<usize>,
    /// Seed for subsampling and the layout
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Use the offline mock backend instead of the configured endpoint
    #[arg(long)]
    mock: bool,
    /// Prompt variant
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Add response-text statistics to the report
    #[arg(long)]
    analyze_reasoning: bool,
}

fn task(t: TaskArg) -> TaskKind {
    match t {
        TaskArg::Classification => TaskKind::Classification,
        TaskArg::Regression => TaskKind::Regression,
    }
}

fn run_overrides(a: RunArgs) -> (Option<PathBuf>, Overrides) {
    let o = Overrides {
        dataset: a.dataset,
        out: a.out,
        zoom_scale: a.zoom_scale,
        k: a.k,
        seed: a.seed,
        ..Default::default()
    };
    (a.config, o)
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Featurize(a) => {
            let o = Overrides {
                seed: a.seed,
                label_column: a.label_column,
                id_column: a.id_column,
                task: a.task.map(task),
                query_fraction: a.query_fraction,
                ..Default::default()
            };
            let cfg = RunConfig::build(a.config.as_deref(), o)?;
            commands::featurize(&a.csv, a.out.as_deref(), &cfg)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Visualize(a) => {
            let (path, o) = run_overrides(a);
            commands::visualize(&RunConfig::build(path.as_deref(), o)?)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Evaluate(a) => {
            let (path, mut o) = run_overrides(a.run);
            o.mock = a.mock;
            o.analyze_reasoning = a.analyze_reasoning;
            o.mode = a.mode.map(|m| match m {
                ModeArg::BasicTsne => PromptMode::BasicTsne,
                ModeArg::TsneKnn => PromptMode::TsneKnn,
            });
            let complete = commands::evaluate(&RunConfig::build(path.as_deref(), o)?)?;
            if complete {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("warning: evaluation incomplete, see failed records in the report");
                Ok(ExitCode::from(3))
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
