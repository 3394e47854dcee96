//! Report assembly and emission.
//!
//! A [`Report`] holds one aggregated row per (dataset configuration,
//! algorithm) plus the provenance needed to rerun it: the configuration
//! snapshot, the seeding scheme, resolved normalizations and LW penalties,
//! and the library version. Emission is deterministic — identical reports
//! serialize to identical bytes; no timestamps are embedded.
//!
//! - `csv`: one data line per row, full-precision numbers (the shortest
//!   decimal form that parses back to the identical float).
//! - `json`: the whole report, pretty-printed.
//! - `markdown`: a dataset x algorithm pivot of `mean ± std` to three
//!   decimals, the best mean per row bolded, a Mean Relative Rank footer,
//!   and footnotes for failures.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use shark_core::{AggregateResult, Algorithm, Normalization};

use crate::config::{ExperimentConfig, LambdaMode};
use crate::error::{HarnessError, Result};

/// Output encodings for a report.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
    Markdown,
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
            ReportFormat::Markdown => "markdown",
        };
        f.write_str(s)
    }
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            other => Err(format!(
                "unknown report format '{other}' (expected csv, json, or markdown)"
            )),
        }
    }
}

/// The LW penalty resolved for one dataset instance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LambdaRecord {
    pub dataset: String,
    pub mode: LambdaMode,
    pub lambda: f64,
}

/// Everything needed to reproduce the report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Provenance {
    /// Library version the report was produced with.
    pub version: String,
    /// Restart seeding scheme, spelled out for the record.
    pub seeding: String,
    /// Normalization actually applied per algorithm, in config order.
    pub normalization: Vec<(Algorithm, Normalization)>,
    /// Resolved LW penalties per dataset instance, in execution order.
    pub lambdas: Vec<LambdaRecord>,
    /// Full configuration snapshot.
    pub config: ExperimentConfig,
}

impl Provenance {
    pub fn new(cfg: &ExperimentConfig, lambdas: Vec<LambdaRecord>) -> Self {
        Provenance {
            version: env!("CARGO_PKG_VERSION").to_string(),
            seeding: format!(
                "restart i of every cell draws from ChaCha8(seed = {} + i) on a stream keyed \
                 by (dataset instance, algorithm); algorithms do not share initial centroids",
                cfg.base_seed
            ),
            normalization: cfg
                .algorithms
                .iter()
                .map(|&a| (a, cfg.normalization_for(a)))
                .collect(),
            lambdas,
            config: cfg.clone(),
        }
    }
}

/// One aggregated (dataset configuration, algorithm) cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportRow {
    pub dataset: String,
    pub algorithm: Algorithm,
    #[serde(flatten)]
    pub result: AggregateResult,
    /// Highest best-of-restarts ARI over the configuration's instances.
    pub best_ari: Option<f64>,
    /// Load failures and per-instance anomalies, when any.
    pub note: Option<String>,
}

/// The assembled experiment outcome.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub provenance: Provenance,
    pub rows: Vec<ReportRow>,
    /// Per-algorithm mean of per-configuration ranks, canonical algorithm
    /// order; empty when no configuration row scored every algorithm.
    pub mean_relative_rank: Vec<(Algorithm, f64)>,
}

impl Report {
    /// True when any dataset failed to load or any cell lost every restart.
    pub fn has_aborted_rows(&self) -> bool {
        self.rows.iter().any(|r| r.note.is_some())
    }
}

fn csv_quote(text: &str) -> String {
    if text.contains(',') || text.contains('"') || text.contains('\n') {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}

fn opt(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

fn emit_csv(report: &Report) -> String {
    let mut out =
        String::from("dataset,algorithm,mean_ari,std_ari,best_ari,rank,n_runs,n_failures,note\n");
    for row in &report.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            csv_quote(&row.dataset),
            row.algorithm,
            opt(row.result.mean_ari),
            opt(row.result.std_ari),
            opt(row.best_ari),
            opt(row.result.per_algorithm_rank),
            row.result.n_runs,
            row.result.n_failures,
            csv_quote(row.note.as_deref().unwrap_or("")),
        ));
    }
    out
}

fn emit_json(report: &Report) -> Result<String> {
    serde_json::to_string_pretty(report)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| HarnessError::Serialize(e.to_string()))
}

fn md_cell(row: &ReportRow, best_in_row: Option<f64>) -> String {
    match (row.result.mean_ari, row.result.std_ari) {
        (Some(mean), Some(std)) => {
            let text = format!("{mean:.3} ± {std:.3}");
            match best_in_row {
                Some(best) if (mean - best).abs() <= 1e-12 => format!("**{text}**"),
                _ => text,
            }
        }
        _ => "—".to_string(),
    }
}

fn emit_markdown(report: &Report) -> String {
    let cfg = &report.provenance.config;
    let mut out = String::from("# Clustering benchmark\n\n");
    out.push_str(&format!(
        "- library version: {}\n- runs per cell: {}; base seed: {}\n",
        report.provenance.version, cfg.runs, cfg.base_seed
    ));
    let norms: Vec<String> = report
        .provenance
        .normalization
        .iter()
        .map(|(a, n)| format!("{a}={n}"))
        .collect();
    out.push_str(&format!("- normalization: {}\n", norms.join(", ")));
    out.push_str(&format!("- seeding: {}\n", report.provenance.seeding));
    if !report.provenance.lambdas.is_empty() {
        let lambdas: Vec<String> = report
            .provenance
            .lambdas
            .iter()
            .map(|l| format!("{} {} {}", l.dataset, l.mode, l.lambda))
            .collect();
        out.push_str(&format!("- lw lambda: {}\n", lambdas.join("; ")));
    }
    out.push('\n');

    out.push_str("| dataset |");
    for a in &cfg.algorithms {
        out.push_str(&format!(" {a} |"));
    }
    out.push_str("\n|---|");
    out.push_str(&"---|".repeat(cfg.algorithms.len()));
    out.push('\n');

    let mut datasets: Vec<&str> = Vec::new();
    for row in &report.rows {
        if !datasets.contains(&row.dataset.as_str()) {
            datasets.push(&row.dataset);
        }
    }
    for dataset in &datasets {
        let cells: Vec<&ReportRow> = report
            .rows
            .iter()
            .filter(|r| r.dataset == *dataset)
            .collect();
        let best = cells
            .iter()
            .filter_map(|r| r.result.mean_ari)
            .fold(None, |acc: Option<f64>, v| {
                Some(acc.map_or(v, |a| a.max(v)))
            });
        out.push_str(&format!("| {dataset} |"));
        for a in &cfg.algorithms {
            let cell = cells
                .iter()
                .find(|r| r.algorithm == *a)
                .map(|r| md_cell(r, best))
                .unwrap_or_else(|| "—".to_string());
            out.push_str(&format!(" {cell} |"));
        }
        out.push('\n');
    }

    if !report.mean_relative_rank.is_empty() {
        let best_rank = report
            .mean_relative_rank
            .iter()
            .map(|&(_, r)| r)
            .fold(f64::INFINITY, f64::min);
        out.push_str("| Mean Relative Rank |");
        for a in &cfg.algorithms {
            let cell = report
                .mean_relative_rank
                .iter()
                .find(|(alg, _)| alg == a)
                .map(|&(_, r)| {
                    let text = format!("{r:.3}");
                    if (r - best_rank).abs() <= 1e-12 {
                        format!("**{text}**")
                    } else {
                        text
                    }
                })
                .unwrap_or_else(|| "—".to_string());
            out.push_str(&format!(" {cell} |"));
        }
        out.push('\n');
    }

    let mut footnotes: Vec<String> = Vec::new();
    for row in &report.rows {
        if row.result.n_failures > 0 {
            footnotes.push(format!(
                "{} / {}: {} of {} runs failed",
                row.dataset, row.algorithm, row.result.n_failures, row.result.n_runs
            ));
        }
        if let Some(note) = &row.note {
            footnotes.push(format!("{} / {}: {}", row.dataset, row.algorithm, note));
        }
    }
    if !footnotes.is_empty() {
        out.push('\n');
        for f in &footnotes {
            out.push_str(&format!("- {f}\n"));
        }
    }
    out
}

/// Renders the report in the requested format.
pub fn emit_report(report: &Report, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Csv => Ok(emit_csv(report)),
        ReportFormat::Json => emit_json(report),
        ReportFormat::Markdown => Ok(emit_markdown(report)),
    }
}

/// Renders and writes the report; `None` writes to stdout.
pub fn write_report(report: &Report, format: ReportFormat, out: Option<&Path>) -> Result<()> {
    let text = emit_report(report, format)?;
    match out {
        Some(path) => fs::write(path, text).map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
