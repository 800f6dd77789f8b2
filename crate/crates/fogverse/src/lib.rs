//! Experiment harness around `fogverse-core`: TOML configuration, parallel
//! sweeps, CSV and plot-data output, and the `fogverse` command line.

pub mod config;
pub mod emit;
pub mod runner;

use std::path::PathBuf;

pub use fogverse_core as core;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: Box<toml::de::Error> },
    #[error(transparent)]
    Config(#[from] fogverse_core::ConfigError),
    #[error(transparent)]
    Scenario(#[from] fogverse_core::scenario::ScenarioError),
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: malformed results: {reason}")]
    Malformed { path: PathBuf, reason: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
