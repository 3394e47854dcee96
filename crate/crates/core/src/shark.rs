//! Shapley-reweighted k-means (SHARK).
//!
//! Each feature's contribution to the within-cluster scatter is an exact
//! Shapley value with a closed form: the feature's own within-cluster sum of
//! squared deviations. SHARK turns those contributions into assignment
//! weights (proportional to inverse contribution) and scores a fit by the
//! harmonic mean of the contributions, which rewards profiles where no
//! feature is left with a large dispersion.

use rand::Rng;

use crate::data::{Centroids, DataMatrix, Labeling, WeightVector};
use crate::error::{Error, Result};
use crate::lloyd::{
    init_centroids, run_weighted_lloyd, ClusterModel, InitMethod, LloydOptions, WeightRule,
};

/// Most features the exhaustive oracle will enumerate subsets for.
pub const ORACLE_FEATURE_LIMIT: usize = 15;

/// Per-feature within-cluster dispersion, and with it each feature's exact
/// Shapley share of the clustering cost.
#[derive(Clone, Debug, PartialEq)]
pub struct ShapleyProfile {
    phi: Vec<f64>,
}

impl ShapleyProfile {
    /// Wraps raw per-feature values; they must be finite and non-negative.
    pub fn from_values(phi: Vec<f64>) -> Result<Self> {
        if phi.is_empty() {
            return Err(Error::EmptyWeights);
        }
        for (index, &value) in phi.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::NegativeWeight { index, value });
            }
        }
        Ok(Self { phi })
    }

    pub(crate) fn from_raw(phi: Vec<f64>) -> Self {
        debug_assert!(phi.iter().all(|v| v.is_finite() && *v >= 0.0));
        Self { phi }
    }

    /// Number of features.
    pub fn len(&self) -> usize {
        self.phi.len()
    }

    /// True when the profile has no entries (never holds for a valid value).
    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    /// Contribution of feature `v`.
    pub fn get(&self, v: usize) -> f64 {
        self.phi[v]
    }

    /// All contributions in feature order.
    pub fn values(&self) -> &[f64] {
        &self.phi
    }

    /// Total cost: the unweighted within-cluster sum of squares.
    pub fn total(&self) -> f64 {
        self.phi.iter().sum()
    }
}

/// Mean-gap diagnostics for a contribution profile: how far the harmonic
/// mean sits below the arithmetic mean, alongside a spread-based reference
/// quantity for that gap.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GapReport {
    pub arithmetic_mean: f64,
    pub harmonic_mean: f64,
    /// `arithmetic_mean - harmonic_mean`; non-negative, zero only for flat
    /// profiles.
    pub epsilon: f64,
    /// `(max - min)^2 / (2 (max + min))`. For exactly two features this
    /// equals `epsilon`; for three or more it is only a spread summary and
    /// can land on either side of `epsilon` (e.g. for (1, 2, 3) the gap is
    /// 4/11 while this expression gives 1/2).
    pub lower_bound: f64,
}

fn check_clustering_shapes(x: &DataMatrix, labels: &Labeling, z: &Centroids) -> Result<()> {
    if labels.len() != x.n_rows() {
        return Err(Error::LabelCountMismatch {
            labels: labels.len(),
            points: x.n_rows(),
        });
    }
    if z.dim() != x.n_cols() {
        return Err(Error::LengthMismatch {
            left: z.dim(),
            right: x.n_cols(),
        });
    }
    if labels.k() != z.k() {
        return Err(Error::LengthMismatch {
            left: labels.k(),
            right: z.k(),
        });
    }
    Ok(())
}

/// Per-feature within-cluster sum of squared deviations. No emptiness check;
/// shapes must already agree.
pub(crate) fn feature_dispersions(x: &DataMatrix, labels: &Labeling, z: &Centroids) -> Vec<f64> {
    let m = x.n_cols();
    let mut phi = vec![0.0f64; m];
    for (i, row) in x.rows_iter().enumerate() {
        let center = z.row(labels.get(i));
        for v in 0..m {
            let d = row[v] - center[v];
            phi[v] += d * d;
        }
    }
    phi
}

/// Exact per-feature Shapley contributions to the within-cluster scatter,
/// via the closed form: feature `v`'s contribution is its own within-cluster
/// sum of squared deviations. Errors if any cluster is empty.
pub fn shapley_closed_form(
    x: &DataMatrix,
    labels: &Labeling,
    z: &Centroids,
) -> Result<ShapleyProfile> {
    check_clustering_shapes(x, labels, z)?;
    if let Some(l) = labels.cluster_sizes().iter().position(|&s| s == 0) {
        return Err(Error::EmptyCluster(l));
    }
    Ok(ShapleyProfile::from_raw(feature_dispersions(x, labels, z)))
}

/// Exhaustive Shapley computation straight from the definition: enumerates
/// every feature subset, evaluates the scatter restricted to that subset
/// directly from the data, and combines marginal contributions with the
/// usual factorial coalition weights. Exponential in the feature count, so
/// it is capped at [`ORACLE_FEATURE_LIMIT`] features; it exists to verify
/// [`shapley_closed_form`], not to be fast.
pub fn shapley_exact_oracle(
    x: &DataMatrix,
    labels: &Labeling,
    z: &Centroids,
) -> Result<ShapleyProfile> {
    check_clustering_shapes(x, labels, z)?;
    let m = x.n_cols();
    if m > ORACLE_FEATURE_LIMIT {
        return Err(Error::TooManyFeatures {
            limit: ORACLE_FEATURE_LIMIT,
            found: m,
        });
    }

    // Scatter restricted to each feature subset, evaluated from scratch.
    let n_masks = 1usize << m;
    let mut cost = vec![0.0f64; n_masks];
    for (mask, slot) in cost.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (i, row) in x.rows_iter().enumerate() {
            let center = z.row(labels.get(i));
            for v in 0..m {
                if mask & (1 << v) != 0 {
                    let d = row[v] - center[v];
                    acc += d * d;
                }
            }
        }
        *slot = acc;
    }

    // |S|! (m - |S| - 1)! / m!, exact in f64 for m <= 15.
    let mut factorial = vec![1.0f64; m + 1];
    for i in 1..=m {
        factorial[i] = factorial[i - 1] * i as f64;
    }

    let mut phi = vec![0.0f64; m];
    for (v, slot) in phi.iter_mut().enumerate() {
        let vbit = 1usize << v;
        let mut acc = 0.0;
        for mask in 0..n_masks {
            if mask & vbit == 0 {
                let s = mask.count_ones() as usize;
                let coalition_weight = factorial[s] * factorial[m - s - 1] / factorial[m];
                acc += coalition_weight * (cost[mask | vbit] - cost[mask]);
            }
        }
        // Cancellation in the marginals can leave a tiny negative residue.
        *slot = acc.max(0.0);
    }
    Ok(ShapleyProfile::from_raw(phi))
}

/// Numerical floor applied before any inversion: contributions below
/// `1e-12 * max(1, total)` are lifted to that floor so a perfectly explained
/// feature cannot produce an infinite weight.
fn clamp_floor(phi: &[f64]) -> Vec<f64> {
    let total: f64 = phi.iter().sum();
    let floor = 1e-12 * total.max(1.0);
    phi.iter().map(|&v| v.max(floor)).collect()
}

pub(crate) fn inverse_weights(phi: &[f64]) -> Vec<f64> {
    let clamped = clamp_floor(phi);
    let inv: Vec<f64> = clamped.iter().map(|&v| 1.0 / v).collect();
    let total: f64 = inv.iter().sum();
    inv.into_iter().map(|v| v / total).collect()
}

pub(crate) fn harmonic_objective(phi: &[f64]) -> f64 {
    let clamped = clamp_floor(phi);
    let inv_sum: f64 = clamped.iter().map(|&v| 1.0 / v).sum();
    phi.len() as f64 / inv_sum
}

/// Assignment weights from a contribution profile: proportional to inverse
/// contribution, so well-explained features count more in the metric. A
/// feature with (numerically) zero contribution ends up holding essentially
/// all the weight.
pub fn update_weights(phi: &ShapleyProfile) -> WeightVector {
    WeightVector::from_normalized(inverse_weights(phi.values()))
}

/// SHARK's objective: the harmonic mean of the per-feature contributions.
/// Lower is better, and a single poorly explained feature drags the value
/// up far less than it drags the arithmetic mean.
pub fn shark_objective(phi: &ShapleyProfile) -> f64 {
    harmonic_objective(phi.values())
}

/// The plain k-means cost per feature: the total contribution (which by
/// efficiency equals the k-means cost) divided by the feature count. This is
/// the arithmetic mean of the contributions, putting the cost on the same
/// scale as the harmonic-mean objective so the two are directly comparable.
pub fn comparable_kmeans_objective(phi: &ShapleyProfile) -> f64 {
    phi.total() / phi.len() as f64
}

/// Arithmetic-versus-harmonic mean gap for a profile, with the spread
/// expression `(max - min)^2 / (2 (max + min))` that equals the gap in the
/// two-feature case. Needs at least two features; contributions at zero are
/// lifted to the numerical floor first.
pub fn gap_report(phi: &ShapleyProfile) -> Result<GapReport> {
    if phi.len() < 2 {
        return Err(Error::SingleFeatureGap);
    }
    let clamped = clamp_floor(phi.values());
    let m = clamped.len() as f64;
    let arithmetic_mean = clamped.iter().sum::<f64>() / m;
    let harmonic_mean = m / clamped.iter().map(|&v| 1.0 / v).sum::<f64>();
    let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in &clamped {
        min = min.min(v);
        max = max.max(v);
    }
    Ok(GapReport {
        arithmetic_mean,
        harmonic_mean,
        epsilon: arithmetic_mean - harmonic_mean,
        lower_bound: (max - min) * (max - min) / (2.0 * (max + min)),
    })
}

/// The reweighting rule: after each centroid update, recompute contributions
/// and point the next assignment pass at their inverses.
struct SharkRule {
    w: Vec<f64>,
}

impl SharkRule {
    fn new(m: usize) -> Self {
        Self {
            w: vec![1.0 / m as f64; m],
        }
    }
}

impl WeightRule for SharkRule {
    fn assignment_weights(&self) -> &[f64] {
        &self.w
    }

    fn after_update(&mut self, x: &DataMatrix, labels: &Labeling, z: &Centroids) -> Result<()> {
        self.w = inverse_weights(&feature_dispersions(x, labels, z));
        Ok(())
    }

    fn objective(&self, x: &DataMatrix, labels: &Labeling, z: &Centroids) -> f64 {
        harmonic_objective(&feature_dispersions(x, labels, z))
    }

    fn model_weights(&self) -> WeightVector {
        WeightVector::from_normalized(self.w.clone())
    }
}

/// Fits SHARK: weighted Lloyd iteration starting from uniform weights, with
/// inverse-contribution reweighting after every centroid update.
pub fn run_shark<R: Rng + ?Sized>(
    x: &DataMatrix,
    k: usize,
    init: InitMethod,
    rng: &mut R,
) -> Result<ClusterModel> {
    run_shark_with(x, k, init, rng, &LloydOptions::default())
}

/// SHARK with explicit loop options.
pub fn run_shark_with<R: Rng + ?Sized>(
    x: &DataMatrix,
    k: usize,
    init: InitMethod,
    rng: &mut R,
    opts: &LloydOptions,
) -> Result<ClusterModel> {
    let z0 = init_centroids(x, k, init, rng)?;
    let mut rule = SharkRule::new(x.n_cols());
    Ok(run_weighted_lloyd(x, k, z0, &mut rule, opts))
}
