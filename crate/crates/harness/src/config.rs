//! Experiment configuration: a TOML document describing datasets,
//! algorithms, restart counts, seeds, per-algorithm normalization, and the
//! LW-k-means penalty policy.
//!
//! ```toml
//! runs = 25
//! base_seed = 42
//! algorithms = ["kmeans_pp", "fwsa", "lw", "shark"]
//!
//! [normalization]
//! shark = "range"        # optional overrides; defaults below
//!
//! [lw]
//! lambda = 0.005
//! beta = 4.0
//! # lambda_mode = "fixed" | "fallback" | "stability"
//!
//! [[datasets]]           # synthetic entry: replicated mixture draws
//! n = 1000
//! m = 10
//! k = 3
//! noise_fraction = 0.5
//! replicates = 10
//!
//! [[datasets]]           # file entry
//! csv = "tests/data/iris.csv"
//! has_header = true
//! label_column = 4
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use shark_core::{Algorithm, Normalization, SynthConfig};

use crate::error::{HarnessError, Result};
use crate::report::ReportFormat;

fn default_runs() -> usize {
    25
}

fn default_lambda() -> f64 {
    0.005
}

fn default_beta() -> f64 {
    4.0
}

fn default_grid_size() -> usize {
    20
}

fn default_subsample_pairs() -> usize {
    10
}

fn default_replicates() -> usize {
    1
}

fn default_min_cluster_size() -> usize {
    20
}

/// How the LW sparsity penalty is chosen for a dataset.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LambdaMode {
    /// Use `lw.lambda` as given.
    Fixed,
    /// Walk `lw.lambda` down one decade at a time until a fit survives.
    Fallback,
    /// Pick the most subsample-stable penalty from an even grid over [0, 1].
    Stability,
}

impl fmt::Display for LambdaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            LambdaMode::Fixed => "fixed",
            LambdaMode::Fallback => "fallback",
            LambdaMode::Stability => "stability",
        };
        f.write_str(s)
    }
}

impl FromStr for LambdaMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "fixed" => Ok(LambdaMode::Fixed),
            "fallback" => Ok(LambdaMode::Fallback),
            "stability" => Ok(LambdaMode::Stability),
            other => Err(format!(
                "unknown lambda mode '{other}' (expected fixed, fallback, or stability)"
            )),
        }
    }
}

/// LW-k-means settings. `lambda_mode = None` picks a per-dataset default:
/// `fallback` for synthetic entries, `stability` for files.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LwSection {
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default)]
    pub lambda_mode: Option<LambdaMode>,
    /// Grid resolution for stability selection.
    #[serde(default = "default_grid_size")]
    pub grid_size: usize,
    /// Subsample pairs scored per grid point.
    #[serde(default = "default_subsample_pairs")]
    pub subsample_pairs: usize,
}

impl Default for LwSection {
    fn default() -> Self {
        LwSection {
            lambda: default_lambda(),
            alpha: None,
            beta: default_beta(),
            lambda_mode: None,
            grid_size: default_grid_size(),
            subsample_pairs: default_subsample_pairs(),
        }
    }
}

/// A dataset read from a CSV file. Scoring needs ground truth, so bench
/// entries must set `label_column`; `k` defaults to the number of distinct
/// labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvDatasetSpec {
    pub csv: PathBuf,
    /// Display name; defaults to the file stem.
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub has_header: bool,
    #[serde(default)]
    pub label_column: Option<usize>,
    #[serde(default)]
    pub k: Option<usize>,
}

impl CsvDatasetSpec {
    pub fn display_name(&self) -> String {
        match &self.name {
            Some(n) => n.clone(),
            None => self
                .csv
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| self.csv.display().to_string()),
        }
    }
}

/// A replicated synthetic configuration: `replicates` independent mixture
/// draws of the same shape. The seed of replicate `r` is `seed + r`
/// (`base_seed + r` when unset).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthDatasetSpec {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    #[serde(default)]
    pub noise_fraction: f64,
    #[serde(default = "default_min_cluster_size")]
    pub min_cluster_size: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
}

impl SynthDatasetSpec {
    /// The underlying generator configuration for replicate `r`.
    pub fn synth_config(&self, r: usize, base_seed: u64) -> SynthConfig {
        SynthConfig {
            n: self.n,
            m: self.m,
            k: self.k,
            noise_fraction: self.noise_fraction,
            min_cluster_size: self.min_cluster_size,
            seed: self.seed.unwrap_or(base_seed) + r as u64,
        }
    }

    pub fn label(&self, base_seed: u64) -> String {
        self.synth_config(0, base_seed).label()
    }
}

/// One `[[datasets]]` entry: either a file or a synthetic configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DatasetSpec {
    Csv(CsvDatasetSpec),
    Synth(SynthDatasetSpec),
}

/// The whole experiment: dataset grid x algorithm set, with seeding and
/// reporting policy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Restarts per (dataset instance, algorithm) cell.
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub base_seed: u64,
    pub algorithms: Vec<Algorithm>,
    pub datasets: Vec<DatasetSpec>,
    /// Per-algorithm normalization overrides. Defaults: z-score for `fwsa`,
    /// range for everything else.
    #[serde(default)]
    pub normalization: BTreeMap<Algorithm, Normalization>,
    #[serde(default)]
    pub lw: LwSection,
    /// Report destination; stdout when unset.
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<ReportFormat>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str, origin: &Path) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| HarnessError::ConfigParse {
                path: origin.to_path_buf(),
                message: e.to_string(),
            })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text, path)
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(HarnessError::BadConfig {
                message: "runs must be at least 1".into(),
            });
        }
        if self.algorithms.is_empty() {
            return Err(HarnessError::BadConfig {
                message: "algorithms must be non-empty".into(),
            });
        }
        for (i, a) in self.algorithms.iter().enumerate() {
            if self.algorithms[..i].contains(a) {
                return Err(HarnessError::BadConfig {
                    message: format!("algorithm '{a}' listed twice"),
                });
            }
        }
        if self.datasets.is_empty() {
            return Err(HarnessError::BadConfig {
                message: "datasets must be non-empty".into(),
            });
        }
        for spec in &self.datasets {
            match spec {
                DatasetSpec::Csv(c) => {
                    if c.label_column.is_none() {
                        return Err(HarnessError::BadConfig {
                            message: format!(
                                "dataset '{}' needs label_column: scoring requires ground truth",
                                c.display_name()
                            ),
                        });
                    }
                    if c.k == Some(0) {
                        return Err(HarnessError::BadConfig {
                            message: format!("dataset '{}' sets k = 0", c.display_name()),
                        });
                    }
                }
                DatasetSpec::Synth(s) => {
                    if s.replicates == 0 {
                        return Err(HarnessError::BadConfig {
                            message: format!(
                                "dataset '{}' sets replicates = 0",
                                s.label(self.base_seed)
                            ),
                        });
                    }
                    s.synth_config(0, self.base_seed).validate()?;
                }
            }
        }
        if self.lw.grid_size < 2 {
            return Err(HarnessError::BadConfig {
                message: "lw.grid_size must be at least 2".into(),
            });
        }
        if self.lw.subsample_pairs == 0 {
            return Err(HarnessError::BadConfig {
                message: "lw.subsample_pairs must be at least 1".into(),
            });
        }
        Ok(())
    }

    /// The normalization an algorithm fits under: explicit override, else
    /// z-score for FWSA and range for everything else.
    pub fn normalization_for(&self, algorithm: Algorithm) -> Normalization {
        match self.normalization.get(&algorithm) {
            Some(&n) => n,
            None if algorithm == Algorithm::Fwsa => Normalization::ZScore,
            None => Normalization::Range,
        }
    }
}
