//! Pipeline CLI: `generate` persona prompts, `collect` responses from a
//! backend, `analyze` the stored datasets, and `report` an analysis
//! directory.
//!
//! Exit codes: 0 success, 2 configuration/template error, 3 backend
//! error, 4 data validation error, 1 anything else.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;

#[derive(Parser)]
#[command(name = "dasslab", version, about = "Questionnaire personas and network psychometrics pipeline")]
struct Cli {
    /// Run configuration (TOML); defaults apply when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the configured output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render the prompt grid into a manifest file.
    Generate {
        /// Prompts per grid cell.
        #[arg(long)]
        iterations: Option<u32>,
    },
    /// Administer a prompt manifest against the configured backend and
    /// write the per-cell dataset files.
    Collect {
        /// Manifest path (defaults to <out>/prompts.jsonl).
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Print the request count and send nothing.
        #[arg(long)]
        dry_run: bool,
    },
    /// Analyze dataset files into plot-ready tables.
    Analyze {
        /// Directory of dataset files (defaults to <out>/data).
        #[arg(long)]
        data_dir: Option<PathBuf>,
        /// Human comparison responses file.
        #[arg(long)]
        human: Option<PathBuf>,
        /// Human column schema: `openpsychometrics`, `default`, or a
        /// JSON schema path.
        #[arg(long)]
        human_schema: Option<String>,
        /// Overwrite an existing non-empty analysis directory.
        #[arg(long)]
        force: bool,
    },
    /// Summarize an analysis directory.
    Report {
        /// Analysis directory (defaults to <out>/analysis).
        #[arg(long)]
        analysis_dir: Option<PathBuf>,
    },
}

/// Error kinds mapped to process exit codes.
pub enum AppError {
    Config(String),
    Backend(String),
    Data(String),
    Other(anyhow::Error),
}

impl AppError {
    fn code(&self) -> u8 {
        match self {
            AppError::Config(_) => 2,
            AppError::Backend(_) => 3,
            AppError::Data(_) => 4,
            AppError::Other(_) => 1,
        }
    }

    fn message(&self) -> String {
        match self {
            AppError::Config(message) => format!("configuration error: {message}"),
            AppError::Backend(message) => format!("backend error: {message}"),
            AppError::Data(message) => format!("data error: {message}"),
            AppError::Other(error) => format!("{error:#}"),
        }
    }
}

impl From<anyhow::Error> for AppError {
    fn from(error: anyhow::Error) -> Self {
        AppError::Other(error)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut config = match &cli.config {
        Some(path) => match RunConfig::load(path) {
            Ok(config) => config,
            Err(error) => {
                eprintln!("configuration error: {error:#}");
                return ExitCode::from(2);
            }
        },
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.run.seed = seed;
    }
    if let Some(out) = cli.out {
        config.run.out_dir = out;
    }

    let result = match cli.command {
        Command::Generate { iterations } => commands::generate::run(&mut config, iterations),
        Command::Collect { manifest, dry_run } => {
            commands::collect::run(&config, manifest, dry_run)
        }
        Command::Analyze {
            data_dir,
            human,
            human_schema,
            force,
        } => commands::analyze::run(&config, data_dir, human, human_schema, force),
        Command::Report { analysis_dir } => commands::report::run(&config, analysis_dir),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("{}", error.message());
            ExitCode::from(error.code())
        }
    }
}
