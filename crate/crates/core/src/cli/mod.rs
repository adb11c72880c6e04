//! Command-line front end: configuration ingestion, experiment dispatch and
//! artifact emission.

pub mod commands;
pub mod config;
pub mod hash;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use thiserror::Error;

pub use commands::{run_command, Outcome};
pub use config::{parse_config, parse_config_str, ExperimentConfig, Format, RunConfig};
pub use hash::spec_hash;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("numerical guard: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Validate,
    Suspend,
    Admissible,
    Iterate,
    Birkhoff,
    Correlate,
    Spectrum,
    Rokhlin,
    Cohom,
    Commutator,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Suspend => "suspend",
            Command::Admissible => "admissible",
            Command::Iterate => "iterate",
            Command::Birkhoff => "birkhoff",
            Command::Correlate => "correlate",
            Command::Spectrum => "spectrum",
            Command::Rokhlin => "rokhlin",
            Command::Cohom => "cohom",
            Command::Commutator => "commutator",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "hbundle", version, about = "Heisenberg bundle experiments over interval exchanges")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `bundle.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Overrides `output.directory`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides `output.formats`.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

/// Runs one invocation and returns the process exit code. Diagnostics go to
/// standard error, written artifact paths to standard output.
pub fn main_with(cli: Cli) -> i32 {
    match execute(&cli) {
        Ok((paths, guard)) => {
            for p in paths {
                println!("{}", p.display());
            }
            match guard {
                Some(msg) => {
                    eprintln!("hbundle: numerical guard: {msg}");
                    3
                }
                None => 0,
            }
        }
        Err(e) => {
            eprintln!("hbundle: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli) -> Result<(Vec<PathBuf>, Option<String>), CliError> {
    let config = parse_config(&cli.config, cli.seed)?;
    let threads = cli.threads.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Validation(format!("cannot start {threads} threads: {e}")))?;
    let outcome = pool.install(|| run_command(cli.command, &config))?;
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from(&config.output.directory));
    let format = cli.format.unwrap_or(config.output.formats);
    let paths = write_artifacts(&dir, cli.command, &outcome, format)?;
    Ok((paths, outcome.guard_failure))
}

/// Writes `<command>-<hash>.json` and/or `.csv`. A command without tabular
/// output always writes its JSON report.
pub fn write_artifacts(dir: &Path, command: Command, outcome: &Outcome, format: Format) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir)?;
    let stem = format!("{}-{}", command.name(), hash::short_hash(&outcome.spec_hash));
    let want_json = format != Format::Csv || outcome.csv.is_none();
    let want_csv = format != Format::Json;
    let mut paths = Vec::new();
    if want_json {
        let p = dir.join(format!("{stem}.json"));
        let mut text = serde_json::to_string_pretty(&outcome.json).expect("report serializes");
        text.push('\n');
        fs::write(&p, text)?;
        paths.push(p);
    }
    if let (true, Some(csv)) = (want_csv, &outcome.csv) {
        let p = dir.join(format!("{stem}.csv"));
        fs::write(&p, csv)?;
        paths.push(p);
    }
    Ok(paths)
}
