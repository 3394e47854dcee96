//! Error type shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong while building inputs or fitting models.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A matrix with zero rows or zero columns was requested.
    #[error("matrix must have at least one row and one column")]
    EmptyMatrix,

    /// The flat buffer does not match the requested shape.
    #[error("shape mismatch: expected {expected} values, found {found}")]
    BadShape { expected: usize, found: usize },

    /// A NaN or infinite value appeared where a finite number is required.
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    /// Two slices that must share a length do not.
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    /// A clustering operation was asked for zero clusters.
    #[error("number of clusters must be at least 1")]
    ZeroClusters,

    /// More clusters were requested than there are data points.
    #[error("cannot form {k} clusters from {n} points")]
    MoreClustersThanPoints { k: usize, n: usize },

    /// A label value falls outside `0..k`.
    #[error("label {label} at position {position} is out of range for k = {k}")]
    LabelOutOfRange {
        position: usize,
        label: usize,
        k: usize,
    },

    /// The labeling covers a different number of points than the matrix.
    #[error("labeling covers {labels} points but the matrix has {points} rows")]
    LabelCountMismatch { labels: usize, points: usize },

    /// A cluster lost all of its members.
    #[error("cluster {0} is empty")]
    EmptyCluster(usize),

    /// Seeding needs `k` distinct rows but the data has fewer.
    #[error("seeding needs {needed} distinct rows, data has only {found}")]
    TooFewDistinctRows { needed: usize, found: usize },

    /// The exhaustive Shapley computation is capped to keep 2^m tractable.
    #[error("exact Shapley evaluation supports at most {limit} features, got {found}")]
    TooManyFeatures { limit: usize, found: usize },

    /// The mean-gap diagnostic is undefined for a single feature.
    #[error("gap diagnostics need at least two features")]
    SingleFeatureGap,

    /// A weight vector had no entries.
    #[error("weight vector must be non-empty")]
    EmptyWeights,

    /// A weight vector contained a negative entry.
    #[error("weight {value} at index {index} is negative")]
    NegativeWeight { index: usize, value: f64 },

    /// A weight vector does not sum to one within tolerance.
    #[error("weights sum to {sum}, expected 1 within 1e-9")]
    WeightsNotNormalized { sum: f64 },

    /// The sparsity penalty must be non-negative.
    #[error("lambda must be non-negative, got {value}")]
    NegativeLambda { value: f64 },

    /// The weight exponent must exceed one for the update to be defined.
    #[error("beta must be greater than 1, got {value}")]
    BadBeta { value: f64 },

    /// The sparsity penalty zeroed out every feature weight.
    #[error("all feature weights collapsed to zero")]
    AllWeightsZero,

    /// The penalty search ran out of candidates without a usable fit.
    #[error("no usable lambda found starting from {start} after {tried} candidates")]
    LambdaSearchExhausted { start: f64, tried: usize },

    /// A stability grid needs at least two candidate values.
    #[error("lambda grid needs at least 2 points, got {size}")]
    BadGrid { size: usize },

    /// Every run in a restart batch produced a failed model.
    #[error("all runs failed; nothing to select from")]
    AllRunsFailed,

    /// A rank table row is missing a score for some algorithm.
    #[error("rank table row {row} is missing a score for {algorithm}")]
    IncompleteRankTable { row: usize, algorithm: String },

    /// Requested cluster sizes cannot satisfy the minimum-size floor.
    #[error("cannot split {n} points into {k} clusters of at least {min_size}")]
    InfeasibleClusterSizes { n: usize, k: usize, min_size: usize },

    /// The noise fraction must be finite and non-negative.
    #[error("noise fraction must be finite and non-negative, got {value}")]
    BadNoiseFraction { value: f64 },
}
