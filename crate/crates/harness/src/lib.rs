//! Benchmark harness for the feature-weighted clustering library: CSV
//! ingestion, TOML experiment configuration, seeded batch execution across
//! algorithms, and deterministic report emission. The `shark` binary wraps
//! this with `fit`, `bench`, `gen`, and `lambda` subcommands.

pub mod config;
pub mod csv_io;
pub mod error;
pub mod report;
pub mod runner;

pub use config::{
    CsvDatasetSpec, DatasetSpec, ExperimentConfig, LambdaMode, LwSection, SynthDatasetSpec,
};
pub use csv_io::{load_csv, parse_csv, write_dataset_csv, CsvOptions};
pub use error::{HarnessError, Result};
pub use report::{
    emit_report, write_report, LambdaRecord, Provenance, Report, ReportFormat, ReportRow,
};
pub use runner::{
    aggregate_cell, entry_labels, prepare_entry, resolve_lambda, run_cell, run_experiment,
    stream_id, DatasetKind, PreparedEntry, PreparedInstance,
};
