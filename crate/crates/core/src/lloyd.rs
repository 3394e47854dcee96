//! Weighted Lloyd iteration: seeding, assignment, centroid updates, and the
//! generic fit loop that the individual algorithms plug their weight rules
//! into.

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::data::{weighted_sqdist_raw, Centroids, DataMatrix, Labeling, WeightVector};
use crate::error::{Error, Result};

/// How initial centroids are chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMethod {
    /// `k` distinct rows drawn uniformly without replacement.
    UniformDistinct,
    /// Squared-distance-proportional seeding (k-means++).
    KMeansPlusPlus,
}

impl fmt::Display for InitMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            InitMethod::UniformDistinct => "uniform",
            InitMethod::KMeansPlusPlus => "kmeanspp",
        };
        f.write_str(s)
    }
}

impl FromStr for InitMethod {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "uniform" => Ok(InitMethod::UniformDistinct),
            "kmeanspp" | "kmeans++" => Ok(InitMethod::KMeansPlusPlus),
            other => Err(format!(
                "unknown init method '{other}' (expected uniform or kmeanspp)"
            )),
        }
    }
}

/// Result of one fit: the final state plus convergence metadata.
///
/// `failed` marks degenerate runs (a cluster emptied out, or a weight update
/// collapsed); such models are still fully populated so callers can inspect
/// them, but restart selection skips them.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterModel {
    pub labels: Labeling,
    pub centroids: Centroids,
    pub weights: WeightVector,
    /// Value of the algorithm's own objective at the final state.
    pub objective: f64,
    /// Number of assignment passes performed.
    pub iterations: usize,
    /// True when labels reached a fixed point before the iteration cap.
    pub converged: bool,
    /// True when the run ended in a degenerate state.
    pub failed: bool,
    /// The algorithm's objective after each completed iteration.
    pub objective_trace: Vec<f64>,
}

/// Knobs for the fit loop.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LloydOptions {
    /// Hard cap on assignment passes.
    pub max_iter: usize,
    /// When set, hitting the cap without label stability marks the model
    /// failed instead of merely non-converged.
    pub strict: bool,
}

impl Default for LloydOptions {
    fn default() -> Self {
        Self {
            max_iter: 300,
            strict: false,
        }
    }
}

/// Bit-level key for a row, used to detect duplicate rows. Negative zero is
/// folded onto positive zero so value-equal rows compare equal.
fn row_key(row: &[f64]) -> Vec<u64> {
    row.iter()
        .map(|&v| if v == 0.0 { 0.0f64 } else { v }.to_bits())
        .collect()
}

/// Indices of the first occurrence of each distinct row, in row order.
fn distinct_row_indices(x: &DataMatrix) -> Vec<usize> {
    let mut seen: HashMap<Vec<u64>, ()> = HashMap::new();
    let mut indices = Vec::new();
    for (i, row) in x.rows_iter().enumerate() {
        if seen.insert(row_key(row), ()).is_none() {
            indices.push(i);
        }
    }
    indices
}

fn centroids_from_indices(x: &DataMatrix, indices: &[usize]) -> Centroids {
    let rows: Vec<Vec<f64>> = indices.iter().map(|&i| x.row(i).to_vec()).collect();
    Centroids::from_rows(&rows).expect("chosen rows form valid centroids")
}

fn check_k(x: &DataMatrix, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::ZeroClusters);
    }
    if k > x.n_rows() {
        return Err(Error::MoreClustersThanPoints { k, n: x.n_rows() });
    }
    Ok(())
}

/// Picks `k` distinct rows uniformly at random, without replacement.
/// Errors when the data has fewer than `k` distinct rows.
pub fn init_uniform<R: Rng + ?Sized>(x: &DataMatrix, k: usize, rng: &mut R) -> Result<Centroids> {
    check_k(x, k)?;
    let mut candidates = distinct_row_indices(x);
    if candidates.len() < k {
        return Err(Error::TooFewDistinctRows {
            needed: k,
            found: candidates.len(),
        });
    }
    // Partial Fisher-Yates: the first k slots end up a uniform sample.
    for slot in 0..k {
        let pick = rng.random_range(slot..candidates.len());
        candidates.swap(slot, pick);
    }
    Ok(centroids_from_indices(x, &candidates[..k]))
}

/// Squared-distance-proportional seeding: the first center is uniform, each
/// subsequent one is drawn with probability proportional to the squared
/// distance to the nearest chosen center. If every remaining distance is
/// zero the next center is drawn uniformly from rows not yet chosen.
pub fn init_kmeanspp<R: Rng + ?Sized>(x: &DataMatrix, k: usize, rng: &mut R) -> Result<Centroids> {
    check_k(x, k)?;
    let n = x.n_rows();
    let mut chosen: Vec<usize> = vec![rng.random_range(0..n)];
    let mut min_d2: Vec<f64> = x
        .rows_iter()
        .map(|row| sqdist(row, x.row(chosen[0])))
        .collect();

    while chosen.len() < k {
        let total: f64 = min_d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &d) in min_d2.iter().enumerate() {
                if target < d {
                    pick = i;
                    break;
                }
                target -= d;
            }
            pick
        } else {
            // All remaining rows coincide with a chosen center; fall back to
            // a uniform draw over rows that are still distinct from them.
            let taken: Vec<Vec<u64>> = chosen.iter().map(|&i| row_key(x.row(i))).collect();
            let remaining: Vec<usize> = (0..n)
                .filter(|&i| !taken.contains(&row_key(x.row(i))))
                .collect();
            if remaining.is_empty() {
                // Fewer distinct rows than k: duplicate a row and let the
                // fit report the resulting empty cluster.
                rng.random_range(0..n)
            } else {
                remaining[rng.random_range(0..remaining.len())]
            }
        };
        chosen.push(next);
        let z = x.row(next).to_vec();
        for (i, row) in x.rows_iter().enumerate() {
            let d = sqdist(row, &z);
            if d < min_d2[i] {
                min_d2[i] = d;
            }
        }
    }
    Ok(centroids_from_indices(x, &chosen))
}

fn sqdist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Dispatches to the requested seeding method.
pub fn init_centroids<R: Rng + ?Sized>(
    x: &DataMatrix,
    k: usize,
    method: InitMethod,
    rng: &mut R,
) -> Result<Centroids> {
    match method {
        InitMethod::UniformDistinct => init_uniform(x, k, rng),
        InitMethod::KMeansPlusPlus => init_kmeanspp(x, k, rng),
    }
}

/// Assigns every point to its nearest centroid under the weighted squared
/// distance. Ties go to the smallest centroid index.
pub fn assign(x: &DataMatrix, z: &Centroids, w: &WeightVector) -> Labeling {
    Labeling::from_raw(assign_raw(x, z, w.as_slice()), z.k())
}

pub(crate) fn assign_raw(x: &DataMatrix, z: &Centroids, w: &[f64]) -> Vec<usize> {
    let k = z.k();
    x.rows_iter()
        .map(|row| {
            let mut best = 0usize;
            let mut best_d = weighted_sqdist_raw(row, z.row(0), w);
            for t in 1..k {
                let d = weighted_sqdist_raw(row, z.row(t), w);
                // Strict comparison keeps the smallest index on ties.
                if d < best_d {
                    best = t;
                    best_d = d;
                }
            }
            best
        })
        .collect()
}

/// Recomputes each centroid as the mean of its members. Errors with the
/// offending cluster index if any cluster has no members.
pub fn update_centroids(x: &DataMatrix, labels: &Labeling, k: usize) -> Result<Centroids> {
    if labels.len() != x.n_rows() {
        return Err(Error::LabelCountMismatch {
            labels: labels.len(),
            points: x.n_rows(),
        });
    }
    let m = x.n_cols();
    let mut sums = vec![0.0f64; k * m];
    let mut counts = vec![0usize; k];
    for (i, row) in x.rows_iter().enumerate() {
        let l = labels.get(i);
        counts[l] += 1;
        let dst = &mut sums[l * m..(l + 1) * m];
        for (s, &v) in dst.iter_mut().zip(row) {
            *s += v;
        }
    }
    for (l, &c) in counts.iter().enumerate() {
        if c == 0 {
            return Err(Error::EmptyCluster(l));
        }
        for s in &mut sums[l * m..(l + 1) * m] {
            *s /= c as f64;
        }
    }
    Centroids::from_vec(k, m, sums)
}

/// Unweighted within-cluster sum of squared distances.
pub fn kmeans_objective(x: &DataMatrix, labels: &Labeling, z: &Centroids) -> f64 {
    x.rows_iter()
        .enumerate()
        .map(|(i, row)| sqdist(row, z.row(labels.get(i))))
        .sum()
}

/// A feature-weighting strategy plugged into the fit loop.
///
/// The loop calls `after_update` once per iteration, after centroids have
/// been recomputed for the fresh labels; the rule then refreshes whatever
/// weights it maintains. An `Err` from `after_update` marks the run failed.
pub(crate) trait WeightRule {
    /// Weights used in the next assignment pass.
    fn assignment_weights(&self) -> &[f64];

    /// Refreshes internal state from the current labels and centroids.
    fn after_update(&mut self, x: &DataMatrix, labels: &Labeling, z: &Centroids) -> Result<()>;

    /// The algorithm's own objective at the given state.
    fn objective(&self, x: &DataMatrix, labels: &Labeling, z: &Centroids) -> f64;

    /// Weights to report on the final model.
    fn model_weights(&self) -> WeightVector;
}

/// The shared fit loop: assign, check stability, update centroids, let the
/// rule reweight, repeat. Runs to label stability or `opts.max_iter`
/// assignment passes, whichever comes first. Any empty cluster or weight
/// collapse ends the run immediately with `failed = true`.
pub(crate) fn run_weighted_lloyd(
    x: &DataMatrix,
    k: usize,
    z0: Centroids,
    rule: &mut dyn WeightRule,
    opts: &LloydOptions,
) -> ClusterModel {
    let mut z = z0;
    let mut labels = Labeling::from_raw(assign_raw(x, &z, rule.assignment_weights()), k);
    let mut iterations = 1usize;
    let mut converged = false;
    let mut failed = false;
    let mut trace = Vec::new();

    loop {
        if labels.has_empty_cluster() {
            failed = true;
            break;
        }
        z = update_centroids(x, &labels, k).expect("all clusters verified non-empty");
        if rule.after_update(x, &labels, &z).is_err() {
            failed = true;
            break;
        }
        trace.push(rule.objective(x, &labels, &z));
        if iterations >= opts.max_iter {
            failed = opts.strict;
            break;
        }
        let next = Labeling::from_raw(assign_raw(x, &z, rule.assignment_weights()), k);
        iterations += 1;
        if next == labels {
            converged = true;
            break;
        }
        labels = next;
    }

    let objective = rule.objective(x, &labels, &z);
    ClusterModel {
        labels,
        centroids: z,
        weights: rule.model_weights(),
        objective,
        iterations,
        converged,
        failed,
        objective_trace: trace,
    }
}

/// Plain k-means: uniform weights that never change.
struct UniformRule {
    w: Vec<f64>,
}

impl WeightRule for UniformRule {
    fn assignment_weights(&self) -> &[f64] {
        &self.w
    }

    fn after_update(&mut self, _: &DataMatrix, _: &Labeling, _: &Centroids) -> Result<()> {
        Ok(())
    }

    fn objective(&self, x: &DataMatrix, labels: &Labeling, z: &Centroids) -> f64 {
        kmeans_objective(x, labels, z)
    }

    fn model_weights(&self) -> WeightVector {
        WeightVector::from_normalized(self.w.clone())
    }
}

/// Plain k-means with the given seeding, default options.
pub fn run_kmeans<R: Rng + ?Sized>(
    x: &DataMatrix,
    k: usize,
    init: InitMethod,
    rng: &mut R,
) -> Result<ClusterModel> {
    run_kmeans_with(x, k, init, rng, &LloydOptions::default())
}

/// Plain k-means with explicit loop options.
pub fn run_kmeans_with<R: Rng + ?Sized>(
    x: &DataMatrix,
    k: usize,
    init: InitMethod,
    rng: &mut R,
    opts: &LloydOptions,
) -> Result<ClusterModel> {
    let z0 = init_centroids(x, k, init, rng)?;
    let mut rule = UniformRule {
        w: vec![1.0 / x.n_cols() as f64; x.n_cols()],
    };
    Ok(run_weighted_lloyd(x, k, z0, &mut rule, opts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn two_blob_line() -> DataMatrix {
        // Four 1-D points in two obvious pairs.
        DataMatrix::from_vec(4, 1, vec![0.0, 1.0, 10.0, 11.0]).unwrap()
    }

    #[test]
    fn uniform_init_picks_distinct_rows() {
        let x = DataMatrix::from_vec(5, 1, vec![1.0, 1.0, 2.0, 2.0, 3.0]).unwrap();
        for seed in 0..20 {
            let z = init_uniform(&x, 3, &mut rng(seed)).unwrap();
            let mut vals: Vec<f64> = (0..3).map(|t| z.get(t, 0)).collect();
            vals.sort_by(f64::total_cmp);
            assert_eq!(vals, vec![1.0, 2.0, 3.0]);
        }
    }

    #[test]
    fn uniform_init_needs_enough_distinct_rows() {
        let x = DataMatrix::from_vec(4, 1, vec![1.0, 1.0, 2.0, 2.0]).unwrap();
        assert_eq!(
            init_uniform(&x, 3, &mut rng(0)).unwrap_err(),
            Error::TooFewDistinctRows {
                needed: 3,
                found: 2
            }
        );
    }

    #[test]
    fn kmeanspp_duplicated_far_point_is_always_seeded() {
        // One far-away value dominates the squared-distance mass, so with
        // k = 2 it must appear among the seeds no matter the stream.
        let x = DataMatrix::from_vec(6, 1, vec![0.0, 0.0, 0.0, 0.0, 0.0, 100.0]).unwrap();
        for seed in 0..20 {
            let z = init_kmeanspp(&x, 2, &mut rng(seed)).unwrap();
            let vals = [z.get(0, 0), z.get(1, 0)];
            assert!(vals.contains(&100.0), "seeds were {vals:?}");
        }
    }

    #[test]
    fn kmeanspp_zero_mass_falls_back_to_distinct_rows() {
        // 0.0 and 5e-324 are distinct rows whose squared distance underflows
        // to zero. Once the other seeds are taken, the remaining mass is
        // exactly zero and the uniform fallback must still find the row.
        let tiny = 5e-324;
        let x = DataMatrix::from_vec(3, 1, vec![0.0, tiny, 1.0]).unwrap();
        for seed in 0..20 {
            let z = init_kmeanspp(&x, 3, &mut rng(seed)).unwrap();
            let mut vals: Vec<f64> = (0..3).map(|t| z.get(t, 0)).collect();
            vals.sort_by(f64::total_cmp);
            assert_eq!(vals, vec![0.0, tiny, 1.0]);
        }
    }

    #[test]
    fn init_rejects_bad_k() {
        let x = two_blob_line();
        assert_eq!(init_uniform(&x, 0, &mut rng(0)).unwrap_err(), Error::ZeroClusters);
        assert_eq!(
            init_kmeanspp(&x, 5, &mut rng(0)).unwrap_err(),
            Error::MoreClustersThanPoints { k: 5, n: 4 }
        );
    }

    #[test]
    fn assign_breaks_ties_toward_smaller_index() {
        // The point at 0.5 is equidistant from both centers.
        let x = DataMatrix::from_vec(1, 1, vec![0.5]).unwrap();
        let z = Centroids::from_vec(2, 1, vec![0.0, 1.0]).unwrap();
        let labels = assign(&x, &z, &WeightVector::uniform(1));
        assert_eq!(labels.as_slice(), &[0]);
    }

    #[test]
    fn assign_respects_feature_weights() {
        // Unweighted, the point is closer to the second center; weighting
        // feature 0 heavily flips the decision.
        let x = DataMatrix::from_vec(1, 2, vec![0.0, 3.0]).unwrap();
        let z = Centroids::from_vec(2, 2, vec![0.0, 0.0, 2.0, 3.0]).unwrap();
        let unweighted = assign(&x, &z, &WeightVector::uniform(2));
        assert_eq!(unweighted.as_slice(), &[1]);
        let skewed = WeightVector::new(vec![0.99, 0.01]).unwrap();
        let weighted = assign(&x, &z, &skewed);
        assert_eq!(weighted.as_slice(), &[0]);
    }

    #[test]
    fn update_centroids_means_and_empty_cluster() {
        let x = two_blob_line();
        let labels = Labeling::new(vec![0, 0, 1, 1], 2).unwrap();
        let z = update_centroids(&x, &labels, 2).unwrap();
        assert_eq!(z.get(0, 0), 0.5);
        assert_eq!(z.get(1, 0), 10.5);

        let gappy = Labeling::new(vec![0, 0, 0, 2], 3).unwrap();
        assert_eq!(
            update_centroids(&x, &gappy, 3).unwrap_err(),
            Error::EmptyCluster(1)
        );
    }

    #[test]
    fn kmeans_k1_recovers_global_mean_and_variance() {
        let x = DataMatrix::from_vec(4, 1, vec![1.0, 2.0, 3.0, 6.0]).unwrap();
        let model = run_kmeans(&x, 1, InitMethod::UniformDistinct, &mut rng(7)).unwrap();
        assert!(model.converged);
        assert!(!model.failed);
        assert!((model.centroids.get(0, 0) - 3.0).abs() < 1e-12);
        // Objective is n times the population variance.
        let var = [1.0f64, 2.0, 3.0, 6.0]
            .iter()
            .map(|v| (v - 3.0) * (v - 3.0))
            .sum::<f64>();
        assert!((model.objective - var).abs() < 1e-12);
    }

    #[test]
    fn kmeans_separates_two_blobs() {
        let x = two_blob_line();
        for seed in 0..10 {
            let model = run_kmeans(&x, 2, InitMethod::KMeansPlusPlus, &mut rng(seed)).unwrap();
            assert!(model.converged);
            assert!(!model.failed);
            assert_eq!(model.labels.get(0), model.labels.get(1));
            assert_eq!(model.labels.get(2), model.labels.get(3));
            assert_ne!(model.labels.get(0), model.labels.get(2));
            assert!((model.objective - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn kmeans_objective_trace_is_monotone() {
        let mut r = rng(42);
        let values: Vec<f64> = (0..60).map(|_| r.random::<f64>() * 10.0).collect();
        let x = DataMatrix::from_vec(20, 3, values).unwrap();
        let model = run_kmeans(&x, 3, InitMethod::UniformDistinct, &mut rng(1)).unwrap();
        for pair in model.objective_trace.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-9, "trace rose: {pair:?}");
        }
        assert!((model.objective - *model.objective_trace.last().unwrap()).abs() < 1e-12);
    }

    #[test]
    fn kmeans_is_deterministic_for_a_seed() {
        let x = two_blob_line();
        let a = run_kmeans(&x, 2, InitMethod::KMeansPlusPlus, &mut rng(3)).unwrap();
        let b = run_kmeans(&x, 2, InitMethod::KMeansPlusPlus, &mut rng(3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn strict_mode_marks_cap_hits_failed() {
        let mut r = rng(11);
        let values: Vec<f64> = (0..80).map(|_| r.random::<f64>()).collect();
        let x = DataMatrix::from_vec(40, 2, values).unwrap();
        let opts = LloydOptions {
            max_iter: 1,
            strict: true,
        };
        let model = run_kmeans_with(&x, 4, InitMethod::UniformDistinct, &mut rng(5), &opts).unwrap();
        assert!(!model.converged);
        assert!(model.failed);
        assert_eq!(model.iterations, 1);

        let lax = LloydOptions {
            max_iter: 1,
            strict: false,
        };
        let model = run_kmeans_with(&x, 4, InitMethod::UniformDistinct, &mut rng(5), &lax).unwrap();
        assert!(!model.converged);
        assert!(!model.failed);
    }
}
