use std::process::ExitCode;

use rmt_core::RmtError;
use thiserror::Error;

/// Every failure the runner reports. `Display` is the single diagnostic line.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("unknown experiment: {0}")]
    UnknownExperiment(String),

    #[error("usage: {0}")]
    Usage(String),

    /// The document does not parse; positions are one-based lines and columns.
    #[error("schema: line {line}, column {column}: {reason}")]
    Schema { line: usize, column: usize, reason: String },

    #[error("config: {0}")]
    Config(String),

    #[error("numeric failure: seed {seed}: {reason}")]
    Numeric { seed: u64, reason: String },

    #[error("io: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Numeric { .. } => ExitCode::from(1),
            _ => ExitCode::from(2),
        }
    }

    /// Attribute a library error to the seed whose computation raised it.
    pub fn at_seed(seed: u64, e: RmtError) -> Self {
        match e {
            RmtError::Config(msg) => CliError::Config(msg),
            RmtError::Numeric { reason, .. } => CliError::Numeric { seed, reason },
            other => CliError::Numeric { seed, reason: other.to_string() },
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
