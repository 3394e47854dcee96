//! Harness-level errors: file ingestion with line diagnostics, configuration
//! problems, and wrappers around library errors.

use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: no data rows", path.display())]
    EmptyCsv { path: PathBuf },
    #[error("{}:{line}: expected {expected} columns, found {found}", path.display())]
    RaggedRow {
        path: PathBuf,
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("{}:{line}: column {column}: '{value}' is not a finite number", path.display())]
    NonNumericCell {
        path: PathBuf,
        line: usize,
        column: usize,
        value: String,
    },
    #[error("label column {index} out of range for a {columns}-column file")]
    LabelColumnOutOfRange { index: usize, columns: usize },
    #[error("{}: {message}", path.display())]
    ConfigParse { path: PathBuf, message: String },
    #[error("invalid configuration: {message}")]
    BadConfig { message: String },
    #[error(transparent)]
    Core(#[from] shark_core::Error),
    #[error("report serialization failed: {0}")]
    Serialize(String),
    #[error("aborted datasets: {names}")]
    AbortedDatasets { names: String },
}

impl HarnessError {
    /// Process exit code for this error: 2 for configuration and usage
    /// mistakes, 1 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::ConfigParse { .. }
            | HarnessError::BadConfig { .. }
            | HarnessError::LabelColumnOutOfRange { .. } => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
