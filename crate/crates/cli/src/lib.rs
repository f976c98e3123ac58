//! Command-line front end: config ingestion, one subcommand per pipeline
//! stage, CSV/JSON emission.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numeric or degenerate
//! scenario error.

pub mod commands;
pub mod config;
pub mod format;

use std::path::PathBuf;

use thiserror::Error;

pub use config::Config;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] pxqama::Error),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if !e.is_config_error() => 3,
            _ => 2,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(source: std::io::Error) -> Self {
        CliError::Io { path: PathBuf::from("<stream>"), source }
    }
}

/// Subcommand selector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    Map,
    Precode,
    Llr,
    Rates,
    Region,
    Modes { n2: Option<usize>, region: Option<PathBuf> },
}

/// Parsed invocation.
#[derive(Debug, Clone)]
pub struct Invocation {
    pub command: Command,
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub overlay: Option<PathBuf>,
    pub workers: Option<usize>,
}

/// Runs one invocation on a worker pool of the requested size.
pub fn run(inv: &Invocation) -> Result<(), CliError> {
    match inv.workers {
        Some(0) => Err(CliError::Config("--workers must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Config(format!("cannot start {n} workers: {e}")))?
            .install(|| commands::dispatch(inv)),
        None => commands::dispatch(inv),
    }
}
