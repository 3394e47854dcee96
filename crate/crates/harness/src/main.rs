//! `shark` — fit, benchmark, and dataset tooling for the feature-weighted
//! clustering library.
//!
//! Exit codes: 0 on success, 1 on runtime failures (unreadable datasets,
//! every restart failed, aborted benchmark rows), 2 on usage and
//! configuration errors.

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use shark_core::{
    best_of_runs, generate_mixture, lambda_stability_select, Algorithm, Normalization,
    SelectionCriterion, SynthConfig,
};
use shark_harness::{
    load_csv, run_cell, write_dataset_csv, write_report, CsvOptions, ExperimentConfig,
    HarnessError, ReportFormat,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(
    name = "shark",
    version,
    about = "Feature-weighted k-means: fits, benchmarks, synthetic data, penalty selection"
)]
struct Cli {
    /// Worker threads for restart batches; also honors SHARK_WORKERS
    /// (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Fit one algorithm on one CSV dataset and print the best restart.
    Fit(FitArgs),
    /// Run a configured benchmark and emit the report.
    Bench(BenchArgs),
    /// Generate a synthetic mixture dataset as CSV.
    Gen(GenArgs),
    /// Select the LW sparsity penalty by subsample stability.
    Lambda(LambdaArgs),
}

#[derive(Args)]
struct FitArgs {
    /// CSV file to cluster.
    #[arg(long)]
    dataset: PathBuf,
    /// Number of clusters; defaults to the label column's class count.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value = "shark", value_parser = Algorithm::from_str)]
    algorithm: Algorithm,
    /// Restarts; the lowest-objective non-failed fit is reported.
    #[arg(long, default_value_t = 25)]
    runs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// range, zscore, or none; defaults to the algorithm's convention
    /// (zscore for fwsa, range otherwise).
    #[arg(long, value_parser = Normalization::from_str)]
    normalize: Option<Normalization>,
    /// The file's first line is a header.
    #[arg(long)]
    has_header: bool,
    /// 0-based index of a categorical label column.
    #[arg(long)]
    label_column: Option<usize>,
    /// LW sparsity penalty.
    #[arg(long, default_value_t = 0.005)]
    lambda: f64,
    /// LW weight exponent.
    #[arg(long, default_value_t = 4.0)]
    beta: f64,
    /// LW reward scale; automatic when omitted.
    #[arg(long)]
    alpha: Option<f64>,
    /// Write the full fit summary as JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Report destination; overrides the config; stdout when both unset.
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv, json, or markdown; overrides the config (default markdown).
    #[arg(long, value_parser = ReportFormat::from_str)]
    format: Option<ReportFormat>,
    /// Override the configured restart count.
    #[arg(long)]
    runs: Option<usize>,
    /// Override the configured base seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct GenArgs {
    /// Points.
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Informative features.
    #[arg(long, default_value_t = 10)]
    features: usize,
    /// Mixture components.
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// Noise columns to append, as a fraction of the informative count.
    #[arg(long, default_value_t = 0.0)]
    noise_fraction: f64,
    /// Minimum points per component.
    #[arg(long, default_value_t = 20)]
    min_cluster_size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path (header + label column included).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct LambdaArgs {
    /// CSV file to select the penalty on.
    #[arg(long)]
    dataset: PathBuf,
    /// Number of clusters; defaults to the label column's class count.
    #[arg(long)]
    k: Option<usize>,
    /// Candidate grid resolution over [0, 1].
    #[arg(long, default_value_t = 20)]
    grid_size: usize,
    /// Subsample pairs scored per candidate.
    #[arg(long, default_value_t = 10)]
    pairs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "range", value_parser = Normalization::from_str)]
    normalize: Normalization,
    #[arg(long)]
    has_header: bool,
    #[arg(long)]
    label_column: Option<usize>,
}

/// JSON payload for `fit --out`.
#[derive(Serialize)]
struct FitSummary {
    algorithm: Algorithm,
    dataset: String,
    n: usize,
    m: usize,
    k: usize,
    normalization: Normalization,
    runs: usize,
    base_seed: u64,
    best_seed: u64,
    objective: f64,
    iterations: usize,
    converged: bool,
    ari: Option<f64>,
    weights: Vec<f64>,
    cluster_sizes: Vec<usize>,
    labels: Vec<usize>,
}

fn cmd_fit(args: &FitArgs) -> Result<(), HarnessError> {
    let opts = CsvOptions {
        has_header: args.has_header,
        label_column: args.label_column,
    };
    let (x, truth) = load_csv(&args.dataset, &opts)?;
    let k = match (args.k, &truth) {
        (Some(k), _) => k,
        (None, Some(t)) => t.k(),
        (None, None) => {
            return Err(HarnessError::BadConfig {
                message: "pass --k or --label-column so k is known".into(),
            })
        }
    };
    let normalization = args.normalize.unwrap_or(match args.algorithm {
        Algorithm::Fwsa => Normalization::ZScore,
        _ => Normalization::Range,
    });
    let xn = normalization.apply(&x);
    // Scoring needs some reference labeling; a constant one scores 0 and is
    // only used when the file carries no labels.
    let reference = truth
        .clone()
        .unwrap_or_else(|| shark_core::Labeling::new(vec![0; xn.n_rows()], 1).expect("constant"));
    let instance = args.dataset.display().to_string();
    let lw_params = shark_core::LwParams {
        lambda: args.lambda,
        alpha: args.alpha,
        beta: args.beta,
    };
    let records = run_cell(
        &xn,
        &reference,
        k,
        args.algorithm,
        args.runs,
        args.seed,
        &instance,
        &lw_params,
    );
    let best = best_of_runs(&records, SelectionCriterion::LowestObjective)?.clone();

    // Refit the winning seed to recover the full model state.
    let mut rng = ChaCha8Rng::seed_from_u64(best.seed);
    rng.set_stream(shark_harness::stream_id(&instance, args.algorithm.as_str()));
    let model = match args.algorithm {
        Algorithm::KMeansPP => {
            shark_core::run_kmeans(&xn, k, shark_core::InitMethod::KMeansPlusPlus, &mut rng)
        }
        Algorithm::Fwsa => {
            shark_core::run_fwsa(&xn, k, shark_core::InitMethod::UniformDistinct, &mut rng)
        }
        Algorithm::Lw => shark_core::run_lw(
            &xn,
            k,
            &lw_params,
            shark_core::InitMethod::UniformDistinct,
            &mut rng,
        ),
        Algorithm::Shark => {
            shark_core::run_shark(&xn, k, shark_core::InitMethod::UniformDistinct, &mut rng)
        }
    }?;

    println!("algorithm: {}", args.algorithm);
    println!(
        "dataset: {} ({} points, {} features, k = {k}, normalization = {normalization})",
        args.dataset.display(),
        xn.n_rows(),
        xn.n_cols()
    );
    println!(
        "best of {} restarts (seed {}): objective = {}",
        args.runs, best.seed, model.objective
    );
    println!(
        "iterations: {}, converged: {}",
        model.iterations, model.converged
    );
    if truth.is_some() {
        println!("ari vs labels: {}", best.ari);
    }
    let weights: Vec<String> = model
        .weights
        .as_slice()
        .iter()
        .map(|w| format!("{w:.6}"))
        .collect();
    println!("weights: [{}]", weights.join(", "));
    println!("cluster sizes: {:?}", model.labels.cluster_sizes());
    let labels: Vec<String> = model.labels.as_slice().iter().map(usize::to_string).collect();
    println!("labels: {}", labels.join(" "));

    if let Some(out) = &args.out {
        let summary = FitSummary {
            algorithm: args.algorithm,
            dataset: instance,
            n: xn.n_rows(),
            m: xn.n_cols(),
            k,
            normalization,
            runs: args.runs,
            base_seed: args.seed,
            best_seed: best.seed,
            objective: model.objective,
            iterations: model.iterations,
            converged: model.converged,
            ari: truth.as_ref().map(|_| best.ari),
            weights: model.weights.as_slice().to_vec(),
            cluster_sizes: model.labels.cluster_sizes(),
            labels: model.labels.as_slice().to_vec(),
        };
        let json = serde_json::to_string_pretty(&summary)
            .map_err(|e| HarnessError::Serialize(e.to_string()))?;
        std::fs::write(out, json + "\n").map_err(|source| HarnessError::Io {
            path: out.clone(),
            source,
        })?;
    }
    Ok(())
}

fn cmd_bench(args: &BenchArgs) -> Result<(), HarnessError> {
    let mut cfg = ExperimentConfig::from_path(&args.config)?;
    if let Some(runs) = args.runs {
        cfg.runs = runs;
    }
    if let Some(seed) = args.seed {
        cfg.base_seed = seed;
    }
    cfg.validate()?;
    let report = shark_harness::run_experiment(&cfg)?;
    let format = args
        .format
        .or(cfg.format)
        .unwrap_or(ReportFormat::Markdown);
    let out = args.out.clone().or_else(|| cfg.output.clone());
    write_report(&report, format, out.as_deref())?;
    if report.has_aborted_rows() {
        let mut aborted: Vec<&str> = report
            .rows
            .iter()
            .filter(|r| r.note.is_some())
            .map(|r| r.dataset.as_str())
            .collect();
        aborted.dedup();
        return Err(HarnessError::AbortedDatasets {
            names: aborted.join(", "),
        });
    }
    Ok(())
}

fn cmd_gen(args: &GenArgs) -> Result<(), HarnessError> {
    let cfg = SynthConfig {
        n: args.n,
        m: args.features,
        k: args.k,
        noise_fraction: args.noise_fraction,
        min_cluster_size: args.min_cluster_size,
        seed: args.seed,
    };
    let data = generate_mixture(&cfg)?;
    write_dataset_csv(&args.out, &data.x, Some(&data.truth))?;
    println!(
        "wrote {} ({} points, {} columns, {} clusters) to {}",
        cfg.label(),
        data.x.n_rows(),
        data.x.n_cols(),
        cfg.k,
        args.out.display()
    );
    Ok(())
}

fn cmd_lambda(args: &LambdaArgs) -> Result<(), HarnessError> {
    let opts = CsvOptions {
        has_header: args.has_header,
        label_column: args.label_column,
    };
    let (x, truth) = load_csv(&args.dataset, &opts)?;
    let k = match (args.k, &truth) {
        (Some(k), _) => k,
        (None, Some(t)) => t.k(),
        (None, None) => {
            return Err(HarnessError::BadConfig {
                message: "pass --k or --label-column so k is known".into(),
            })
        }
    };
    let xn = args.normalize.apply(&x);
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    rng.set_stream(shark_harness::stream_id(
        &args.dataset.display().to_string(),
        "lambda",
    ));
    let lambda = lambda_stability_select(&xn, k, args.grid_size, args.pairs, &mut rng)?;
    println!("selected lambda = {lambda}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let workers = cli.workers.or_else(|| {
        std::env::var("SHARK_WORKERS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(workers) = workers {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build_global();
    }
    let result = match &cli.cmd {
        Cmd::Fit(args) => cmd_fit(args),
        Cmd::Bench(args) => cmd_bench(args),
        Cmd::Gen(args) => cmd_gen(args),
        Cmd::Lambda(args) => cmd_lambda(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
