//! Seeded batch execution: expands the configured datasets, fits every
//! algorithm `runs` times per dataset instance, aggregates restart batches
//! into per-configuration scores, and assembles the report.
//!
//! Seeding: restart `i` of any cell draws from a ChaCha8 generator seeded
//! `base_seed + i`, on a stream keyed by the (dataset instance, algorithm)
//! pair. Runs are therefore independent of each other (adding or removing
//! restart `j` never changes restart `i`), and algorithms sharing a base
//! seed never share random draws — in particular, initial centroids are not
//! shared across algorithms. The LW penalty is resolved once per dataset
//! instance on its own stream.

use std::collections::HashMap;
use std::rc::Rc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use shark_core::{
    ari, best_of_runs, generate_mixture, lambda_fallback, lambda_stability_select, rank_row,
    run_fwsa, run_kmeans, run_lw, run_shark, AggregateResult, Algorithm, ClusterModel,
    DataMatrix, InitMethod, Labeling, LwParams, Normalization, RunRecord, SelectionCriterion,
};

use crate::config::{DatasetSpec, ExperimentConfig, LambdaMode};
use crate::csv_io::{load_csv, CsvOptions};
use crate::error::{HarnessError, Result};
use crate::report::{LambdaRecord, Provenance, Report, ReportRow};

/// Where a dataset instance came from; decides the default LW penalty mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DatasetKind {
    Csv,
    Synth,
}

/// One concrete dataset ready to fit.
#[derive(Clone, Debug)]
pub struct PreparedInstance {
    /// Unique instance id, e.g. `1000x10-3k+5NF#2` or `iris`.
    pub instance: String,
    pub x: DataMatrix,
    pub truth: Labeling,
    pub k: usize,
}

/// All instances of one `[[datasets]]` entry.
#[derive(Clone, Debug)]
pub struct PreparedEntry {
    pub label: String,
    pub kind: DatasetKind,
    pub instances: Vec<PreparedInstance>,
}

/// FNV-1a hash of the (instance, purpose) pair; used as the ChaCha8 stream
/// id so that different algorithms and different datasets draw from
/// disjoint random streams even under the same seed.
pub fn stream_id(instance: &str, purpose: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in instance.bytes().chain([0u8]).chain(purpose.bytes()) {
        h ^= u64::from(byte);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Expands one config entry into fit-ready instances.
pub fn prepare_entry(
    spec: &DatasetSpec,
    label: &str,
    base_seed: u64,
) -> Result<PreparedEntry> {
    match spec {
        DatasetSpec::Csv(c) => {
            let opts = CsvOptions {
                has_header: c.has_header,
                label_column: c.label_column,
            };
            let (x, labels) = load_csv(&c.csv, &opts)?;
            let truth = labels.ok_or_else(|| HarnessError::BadConfig {
                message: format!("dataset '{label}' has no label column"),
            })?;
            let k = c.k.unwrap_or_else(|| truth.k());
            Ok(PreparedEntry {
                label: label.to_string(),
                kind: DatasetKind::Csv,
                instances: vec![PreparedInstance {
                    instance: label.to_string(),
                    x,
                    truth,
                    k,
                }],
            })
        }
        DatasetSpec::Synth(s) => {
            let mut instances = Vec::with_capacity(s.replicates);
            for r in 0..s.replicates {
                let data = generate_mixture(&s.synth_config(r, base_seed))?;
                instances.push(PreparedInstance {
                    instance: format!("{label}#{r}"),
                    x: data.x,
                    truth: data.truth,
                    k: s.k,
                });
            }
            Ok(PreparedEntry {
                label: label.to_string(),
                kind: DatasetKind::Synth,
                instances,
            })
        }
    }
}

/// Resolves the LW penalty for one dataset instance according to the
/// configured mode (or the per-kind default: fallback for synthetic data,
/// stability selection for files).
pub fn resolve_lambda(
    cfg: &ExperimentConfig,
    kind: DatasetKind,
    instance: &str,
    x_lw: &DataMatrix,
    k: usize,
) -> Result<(LambdaMode, f64)> {
    let mode = cfg.lw.lambda_mode.unwrap_or(match kind {
        DatasetKind::Synth => LambdaMode::Fallback,
        DatasetKind::Csv => LambdaMode::Stability,
    });
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.base_seed);
    rng.set_stream(stream_id(instance, "lambda"));
    let lambda = match mode {
        LambdaMode::Fixed => cfg.lw.lambda,
        LambdaMode::Fallback => lambda_fallback(x_lw, k, cfg.lw.lambda, &mut rng)?,
        LambdaMode::Stability => {
            lambda_stability_select(x_lw, k, cfg.lw.grid_size, cfg.lw.subsample_pairs, &mut rng)?
        }
    };
    Ok((mode, lambda))
}

fn fit_once(
    x: &DataMatrix,
    k: usize,
    algorithm: Algorithm,
    lw_params: &LwParams,
    rng: &mut ChaCha8Rng,
) -> shark_core::Result<ClusterModel> {
    match algorithm {
        Algorithm::KMeansPP => run_kmeans(x, k, InitMethod::KMeansPlusPlus, rng),
        Algorithm::Fwsa => run_fwsa(x, k, InitMethod::UniformDistinct, rng),
        Algorithm::Lw => run_lw(x, k, lw_params, InitMethod::UniformDistinct, rng),
        Algorithm::Shark => run_shark(x, k, InitMethod::UniformDistinct, rng),
    }
}

/// Fits one (dataset instance, algorithm) cell: `runs` restarts with seeds
/// `base_seed..base_seed+runs`, each on the cell's own RNG stream. Restarts
/// run in parallel when a multi-threaded rayon pool is active; records come
/// back in seed order either way. Fits that error out (rather than merely
/// converging degenerately) become failed records with an infinite
/// objective.
#[allow(clippy::too_many_arguments)]
pub fn run_cell(
    x: &DataMatrix,
    truth: &Labeling,
    k: usize,
    algorithm: Algorithm,
    runs: usize,
    base_seed: u64,
    instance: &str,
    lw_params: &LwParams,
) -> Vec<RunRecord> {
    let stream = stream_id(instance, algorithm.as_str());
    (0..runs)
        .into_par_iter()
        .map(|i| {
            let seed = base_seed + i as u64;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream);
            let started = Instant::now();
            match fit_once(x, k, algorithm, lw_params, &mut rng) {
                Ok(model) => RunRecord {
                    algorithm,
                    dataset: instance.to_string(),
                    seed,
                    ari: ari(&model.labels, truth).expect("fit preserves the point count"),
                    objective: model.objective,
                    failed: model.failed,
                    wall_time: started.elapsed(),
                },
                Err(_) => RunRecord {
                    algorithm,
                    dataset: instance.to_string(),
                    seed,
                    ari: 0.0,
                    objective: f64::INFINITY,
                    failed: true,
                    wall_time: started.elapsed(),
                },
            }
        })
        .collect()
}

fn population_std(values: &[f64], mean: f64) -> f64 {
    let var =
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / values.len() as f64;
    var.sqrt()
}

/// Collapses the per-instance restart batches of one cell into its
/// configuration-level aggregate: each instance contributes the ARI of its
/// lowest-objective non-failed restart; instances with no survivor are
/// counted in the notes. `n_runs` counts every attempted fit.
pub fn aggregate_cell(
    batches: &[Vec<RunRecord>],
) -> (AggregateResult, Option<f64>, Vec<String>) {
    let mut best_aris = Vec::new();
    let mut notes = Vec::new();
    let mut n_runs = 0usize;
    let mut n_failures = 0usize;
    for batch in batches {
        n_runs += batch.len();
        n_failures += batch.iter().filter(|r| r.failed).count();
        match best_of_runs(batch, SelectionCriterion::LowestObjective) {
            Ok(best) => best_aris.push(best.ari),
            Err(_) => {
                let name = batch.first().map(|r| r.dataset.as_str()).unwrap_or("?");
                notes.push(format!("{name}: all {} runs failed", batch.len()));
            }
        }
    }
    let (mean_ari, std_ari, best_ari) = if best_aris.is_empty() {
        (None, None, None)
    } else {
        let mean = best_aris.iter().sum::<f64>() / best_aris.len() as f64;
        let best = best_aris.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (Some(mean), Some(population_std(&best_aris, mean)), Some(best))
    };
    (
        AggregateResult {
            mean_ari,
            std_ari,
            per_algorithm_rank: None,
            n_runs,
            n_failures,
        },
        best_ari,
        notes,
    )
}

fn failed_batch(
    instance: &str,
    algorithm: Algorithm,
    runs: usize,
    base_seed: u64,
) -> Vec<RunRecord> {
    (0..runs)
        .map(|i| RunRecord {
            algorithm,
            dataset: instance.to_string(),
            seed: base_seed + i as u64,
            ari: 0.0,
            objective: f64::INFINITY,
            failed: true,
            wall_time: std::time::Duration::ZERO,
        })
        .collect()
}

/// Entry labels for every configured dataset, de-duplicated in config order
/// by suffixing repeats with `(2)`, `(3)`, ...
pub fn entry_labels(cfg: &ExperimentConfig) -> Vec<String> {
    let mut labels = Vec::with_capacity(cfg.datasets.len());
    let mut seen: HashMap<String, usize> = HashMap::new();
    for spec in &cfg.datasets {
        let base = match spec {
            DatasetSpec::Csv(c) => c.display_name(),
            DatasetSpec::Synth(s) => s.label(cfg.base_seed),
        };
        let count = seen.entry(base.clone()).or_insert(0);
        *count += 1;
        if *count == 1 {
            labels.push(base);
        } else {
            labels.push(format!("{base} ({count})"));
        }
    }
    labels
}

/// Runs the whole experiment. Dataset entries that fail to load are
/// reported as rows with a note and skipped; everything else is fitted,
/// aggregated, and ranked. The result is fully determined by the
/// configuration.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let labels = entry_labels(cfg);
    let mut rows: Vec<ReportRow> = Vec::new();
    let mut lambda_records: Vec<LambdaRecord> = Vec::new();
    let mut rank_table: Vec<Vec<(Algorithm, f64)>> = Vec::new();

    for (spec, label) in cfg.datasets.iter().zip(&labels) {
        let entry = match prepare_entry(spec, label, cfg.base_seed) {
            Ok(entry) => entry,
            Err(e) => {
                for &algorithm in &cfg.algorithms {
                    rows.push(ReportRow {
                        dataset: label.clone(),
                        algorithm,
                        result: AggregateResult {
                            mean_ari: None,
                            std_ari: None,
                            per_algorithm_rank: None,
                            n_runs: 0,
                            n_failures: 0,
                        },
                        best_ari: None,
                        note: Some(format!("dataset aborted: {e}")),
                    });
                }
                continue;
            }
        };

        // Normalized copies, one per distinct normalization in use.
        let mut norm_cache: Vec<HashMap<Normalization, Rc<DataMatrix>>> =
            vec![HashMap::new(); entry.instances.len()];
        let mut normalized = |idx: usize, instances: &[PreparedInstance], norm: Normalization| {
            Rc::clone(
                norm_cache[idx]
                    .entry(norm)
                    .or_insert_with(|| Rc::new(norm.apply(&instances[idx].x))),
            )
        };

        let row_base = rows.len();
        let mut row_scores: Vec<(Algorithm, f64)> = Vec::new();
        for &algorithm in &cfg.algorithms {
            let norm = cfg.normalization_for(algorithm);
            let mut batches: Vec<Vec<RunRecord>> = Vec::with_capacity(entry.instances.len());
            let mut notes: Vec<String> = Vec::new();
            for (idx, inst) in entry.instances.iter().enumerate() {
                let x = normalized(idx, &entry.instances, norm);
                let lw_params = if algorithm == Algorithm::Lw {
                    match resolve_lambda(cfg, entry.kind, &inst.instance, &x, inst.k) {
                        Ok((mode, lambda)) => {
                            lambda_records.push(LambdaRecord {
                                dataset: inst.instance.clone(),
                                mode,
                                lambda,
                            });
                            LwParams {
                                lambda,
                                alpha: cfg.lw.alpha,
                                beta: cfg.lw.beta,
                            }
                        }
                        Err(e) => {
                            notes.push(format!("{}: lambda selection failed: {e}", inst.instance));
                            batches.push(failed_batch(
                                &inst.instance,
                                algorithm,
                                cfg.runs,
                                cfg.base_seed,
                            ));
                            continue;
                        }
                    }
                } else {
                    LwParams::default()
                };
                batches.push(run_cell(
                    &x,
                    &inst.truth,
                    inst.k,
                    algorithm,
                    cfg.runs,
                    cfg.base_seed,
                    &inst.instance,
                    &lw_params,
                ));
            }
            let (result, best_ari, mut agg_notes) = aggregate_cell(&batches);
            notes.append(&mut agg_notes);
            if let Some(mean) = result.mean_ari {
                row_scores.push((algorithm, mean));
            }
            rows.push(ReportRow {
                dataset: label.clone(),
                algorithm,
                result,
                best_ari,
                note: if notes.is_empty() {
                    None
                } else {
                    Some(notes.join("; "))
                },
            });
        }

        // Rank the configuration row when every algorithm scored.
        if row_scores.len() == cfg.algorithms.len() {
            for (algorithm, rank) in rank_row(&row_scores) {
                for row in &mut rows[row_base..] {
                    if row.algorithm == algorithm {
                        row.result.per_algorithm_rank = Some(rank);
                    }
                }
            }
            rank_table.push(row_scores);
        }
    }

    let mean_relative_rank = if rank_table.is_empty() {
        Vec::new()
    } else {
        shark_core::mean_relative_rank(&rank_table)?
    };

    Ok(Report {
        provenance: Provenance::new(cfg, lambda_records),
        rows,
        mean_relative_rank,
    })
}
