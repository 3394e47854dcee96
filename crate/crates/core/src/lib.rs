//! Feature-weighted k-means clustering.
//!
//! The centerpiece is SHARK (Shapley-reweighted k-means): the within-cluster
//! scatter decomposes exactly across features, each feature's share has a
//! closed form, and the algorithm feeds the inverse shares back as
//! assignment weights while scoring fits by the harmonic mean of the shares.
//! Two published feature-weighting baselines (FWSA and LW-k-means) and plain
//! k-means run on the same Lloyd engine for comparison, alongside a
//! synthetic mixture generator and the evaluation utilities the benchmark
//! harness needs.
//!
//! All randomness flows through caller-supplied [`rand::Rng`] instances, so
//! every fit is reproducible from a seed.
//!
//! ```
//! use rand::SeedableRng;
//! use rand_chacha::ChaCha8Rng;
//! use shark_core::{generate_mixture, range_normalize, run_shark, InitMethod, SynthConfig};
//!
//! let cfg = SynthConfig {
//!     n: 200, m: 5, k: 2,
//!     noise_fraction: 0.4,
//!     min_cluster_size: 20,
//!     seed: 7,
//! };
//! let data = generate_mixture(&cfg).unwrap();
//! let x = range_normalize(&data.x);
//! let mut rng = ChaCha8Rng::seed_from_u64(1);
//! let model = run_shark(&x, 2, InitMethod::UniformDistinct, &mut rng).unwrap();
//! assert!(!model.failed);
//! assert_eq!(model.weights.len(), 7);
//! ```

pub mod baselines;
pub mod data;
pub mod error;
pub mod eval;
pub mod lloyd;
pub mod shark;
pub mod synth;

pub use baselines::{
    fwsa_separations, fwsa_update_weights, lambda_fallback, lambda_stability_select,
    lw_dispersion, lw_update_weights, run_fwsa, run_fwsa_with_state, run_lw, run_lw_with_state,
    soft_threshold, FwsaState, LwParams, LwState,
};
pub use data::{
    range_normalize, weighted_sqdist, zscore_normalize, Centroids, DataMatrix, Labeling,
    Normalization, WeightVector,
};
pub use error::{Error, Result};
pub use eval::{
    ari, best_of_runs, mean_relative_rank, rank_row, AggregateResult, Algorithm, RunRecord,
    SelectionCriterion,
};
pub use lloyd::{
    assign, init_centroids, init_kmeanspp, init_uniform, kmeans_objective, run_kmeans,
    run_kmeans_with, update_centroids, ClusterModel, InitMethod, LloydOptions,
};
pub use shark::{
    comparable_kmeans_objective, gap_report, run_shark, run_shark_with, shapley_closed_form,
    shapley_exact_oracle, shark_objective, update_weights, GapReport, ShapleyProfile,
};
pub use synth::{generate_mixture, inject_noise, LabeledDataset, SynthConfig};
