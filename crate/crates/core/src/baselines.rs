//! Feature-weighting baselines: FWSA (separation-ratio weight updates) and
//! LW-k-means (soft-thresholded sparse weights), plus the penalty-selection
//! helpers LW needs in practice.

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

use crate::data::{DataMatrix, Labeling, WeightVector};
use crate::data::Centroids;
use crate::error::{Error, Result};
use crate::eval::ari;
use crate::lloyd::{
    init_centroids, run_weighted_lloyd, ClusterModel, InitMethod, LloydOptions, WeightRule,
};
use crate::shark::feature_dispersions;

/// FWSA iteration state: current weights plus the separations they were
/// computed from.
#[derive(Clone, Debug, PartialEq)]
pub struct FwsaState {
    pub weights: WeightVector,
    /// Within-cluster separation per feature.
    pub a: Vec<f64>,
    /// Between-cluster separation per feature.
    pub b: Vec<f64>,
}

/// Per-feature within-cluster (`a_v`) and between-cluster (`b_v`)
/// separations. `a_v` sums squared deviations of points from their own
/// center; `b_v` sums, over clusters, the cluster size times the squared
/// deviation of the center from the global mean. Errors if a cluster is
/// empty.
pub fn fwsa_separations(
    x: &DataMatrix,
    labels: &Labeling,
    z: &Centroids,
) -> Result<(Vec<f64>, Vec<f64>)> {
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
    let sizes = labels.cluster_sizes();
    if let Some(l) = sizes.iter().position(|&s| s == 0) {
        return Err(Error::EmptyCluster(l));
    }
    let m = x.n_cols();
    let a = feature_dispersions(x, labels, z);
    let mut b = vec![0.0f64; m];
    for (v, bv) in b.iter_mut().enumerate() {
        let global_mean = x.column(v).sum::<f64>() / x.n_rows() as f64;
        for (l, &size) in sizes.iter().enumerate() {
            let d = z.get(l, v) - global_mean;
            *bv += size as f64 * d * d;
        }
    }
    Ok((a, b))
}

/// FWSA's half-step weight update: the new weight is the average of the
/// previous weight and the feature's share of the between/within separation
/// ratios. A feature with zero within-cluster separation gets ten times the
/// largest finite ratio; if no feature has a positive finite ratio the
/// weights stay where they are.
pub fn fwsa_update_weights(prev: &WeightVector, a: &[f64], b: &[f64]) -> WeightVector {
    let m = prev.len();
    debug_assert_eq!(a.len(), m);
    debug_assert_eq!(b.len(), m);

    let mut ratios = vec![None::<f64>; m];
    let mut max_finite = 0.0f64;
    for v in 0..m {
        if a[v] > 0.0 {
            let r = b[v] / a[v];
            ratios[v] = Some(r);
            max_finite = max_finite.max(r);
        }
    }
    if max_finite == 0.0 {
        // Every ratio is zero or undefined; there is no signal to move on.
        return prev.clone();
    }
    let filled: Vec<f64> = ratios
        .into_iter()
        .map(|r| r.unwrap_or(max_finite * 10.0))
        .collect();
    let total: f64 = filled.iter().sum();
    let w = (0..m)
        .map(|v| 0.5 * (prev.get(v) + filled[v] / total))
        .collect();
    WeightVector::from_normalized(w)
}

struct FwsaRule {
    state: FwsaState,
}

impl FwsaRule {
    fn new(m: usize) -> Self {
        Self {
            state: FwsaState {
                weights: WeightVector::uniform(m),
                a: vec![0.0; m],
                b: vec![0.0; m],
            },
        }
    }
}

impl WeightRule for FwsaRule {
    fn assignment_weights(&self) -> &[f64] {
        self.state.weights.as_slice()
    }

    fn after_update(&mut self, x: &DataMatrix, labels: &Labeling, z: &Centroids) -> Result<()> {
        let (a, b) = fwsa_separations(x, labels, z)?;
        self.state.weights = fwsa_update_weights(&self.state.weights, &a, &b);
        self.state.a = a;
        self.state.b = b;
        Ok(())
    }

    fn objective(&self, x: &DataMatrix, labels: &Labeling, z: &Centroids) -> f64 {
        let phi = feature_dispersions(x, labels, z);
        phi.iter()
            .zip(self.state.weights.as_slice())
            .map(|(p, w)| p * w)
            .sum()
    }

    fn model_weights(&self) -> WeightVector {
        self.state.weights.clone()
    }
}

/// Fits FWSA: weighted Lloyd iteration whose weights drift half-way toward
/// the normalized between/within separation ratios each pass. The objective
/// is the weighted within-cluster scatter.
pub fn run_fwsa<R: Rng + ?Sized>(
    x: &DataMatrix,
    k: usize,
    init: InitMethod,
    rng: &mut R,
) -> Result<ClusterModel> {
    run_fwsa_with_state(x, k, init, rng, &LloydOptions::default()).map(|(model, _)| model)
}

/// FWSA, also returning the final iteration state.
pub fn run_fwsa_with_state<R: Rng + ?Sized>(
    x: &DataMatrix,
    k: usize,
    init: InitMethod,
    rng: &mut R,
    opts: &LloydOptions,
) -> Result<(ClusterModel, FwsaState)> {
    let z0 = init_centroids(x, k, init, rng)?;
    let mut rule = FwsaRule::new(x.n_cols());
    let model = run_weighted_lloyd(x, k, z0, &mut rule, opts);
    Ok((model, rule.state))
}

/// LW-k-means hyperparameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LwParams {
    /// Sparsity penalty on the weights.
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    /// Scale of the weight reward term; `None` picks it automatically from
    /// the first iteration's dispersions as `2 * mean / beta`.
    #[serde(default)]
    pub alpha: Option<f64>,
    /// Weight exponent; must exceed 1.
    #[serde(default = "default_beta")]
    pub beta: f64,
}

fn default_lambda() -> f64 {
    0.005
}

fn default_beta() -> f64 {
    4.0
}

impl Default for LwParams {
    fn default() -> Self {
        Self {
            lambda: default_lambda(),
            alpha: None,
            beta: default_beta(),
        }
    }
}

impl LwParams {
    fn validate(&self) -> Result<()> {
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return Err(Error::NegativeLambda { value: self.lambda });
        }
        if !self.beta.is_finite() || self.beta <= 1.0 {
            return Err(Error::BadBeta { value: self.beta });
        }
        Ok(())
    }
}

/// Final LW-k-means state with the raw (unnormalized, possibly zero) feature
/// weights the sparsity penalty produced.
#[derive(Clone, Debug, PartialEq)]
pub struct LwState {
    pub weights: Vec<f64>,
    pub centroids: Centroids,
    pub labels: Labeling,
}

/// Per-feature within-cluster dispersion, the quantity LW's weight update
/// operates on. Shapes must agree; empty clusters simply contribute nothing.
pub fn lw_dispersion(x: &DataMatrix, labels: &Labeling, z: &Centroids) -> Vec<f64> {
    feature_dispersions(x, labels, z)
}

/// Soft thresholding: shrinks `x` toward zero by `lambda`, clipping the
/// middle band to exactly zero.
pub fn soft_threshold(x: f64, lambda: f64) -> f64 {
    if x > lambda {
        x - lambda
    } else if x < -lambda {
        x + lambda
    } else {
        0.0
    }
}

/// LW's closed-form weight update from per-feature dispersions. Features
/// with zero dispersion, or whose thresholded reward goes non-positive, get
/// weight exactly zero.
pub fn lw_update_weights(d: &[f64], alpha: f64, lambda: f64, beta: f64) -> Vec<f64> {
    d.iter()
        .map(|&dv| {
            if dv == 0.0 {
                return 0.0;
            }
            let base = soft_threshold(alpha / dv, lambda) / beta;
            if base <= 0.0 {
                0.0
            } else {
                base.powf(1.0 / (beta - 1.0))
            }
        })
        .collect()
}

fn lw_effective_weights(omega: &[f64], lambda: f64, beta: f64) -> Vec<f64> {
    omega.iter().map(|&w| w.powf(beta) + lambda * w).collect()
}

struct LwRule {
    lambda: f64,
    beta: f64,
    alpha: Option<f64>,
    omega: Vec<f64>,
    effective: Vec<f64>,
}

impl LwRule {
    fn new(m: usize, params: &LwParams) -> Self {
        let omega = vec![1.0 / m as f64; m];
        let effective = lw_effective_weights(&omega, params.lambda, params.beta);
        Self {
            lambda: params.lambda,
            beta: params.beta,
            alpha: params.alpha,
            omega,
            effective,
        }
    }
}

impl WeightRule for LwRule {
    fn assignment_weights(&self) -> &[f64] {
        &self.effective
    }

    fn after_update(&mut self, x: &DataMatrix, labels: &Labeling, z: &Centroids) -> Result<()> {
        let d = feature_dispersions(x, labels, z);
        let alpha = *self
            .alpha
            .get_or_insert_with(|| 2.0 * d.iter().sum::<f64>() / d.len() as f64 / self.beta);
        self.omega = lw_update_weights(&d, alpha, self.lambda, self.beta);
        if self.omega.iter().all(|&w| w == 0.0) {
            return Err(Error::AllWeightsZero);
        }
        self.effective = lw_effective_weights(&self.omega, self.lambda, self.beta);
        Ok(())
    }

    fn objective(&self, x: &DataMatrix, labels: &Labeling, z: &Centroids) -> f64 {
        let scatter: f64 = x
            .rows_iter()
            .enumerate()
            .map(|(i, row)| {
                crate::data::weighted_sqdist_raw(row, z.row(labels.get(i)), &self.effective)
            })
            .sum();
        let reward: f64 = self.omega.iter().sum();
        scatter - self.alpha.unwrap_or(0.0) * reward
    }

    fn model_weights(&self) -> WeightVector {
        let total: f64 = self.omega.iter().sum();
        if total > 0.0 {
            WeightVector::from_normalized(self.omega.iter().map(|&w| w / total).collect())
        } else {
            WeightVector::uniform(self.omega.len())
        }
    }
}

/// Fits LW-k-means: weighted Lloyd iteration with the soft-thresholded
/// closed-form weight update. The penalty can zero out every weight, which
/// ends the run as failed.
pub fn run_lw<R: Rng + ?Sized>(
    x: &DataMatrix,
    k: usize,
    params: &LwParams,
    init: InitMethod,
    rng: &mut R,
) -> Result<ClusterModel> {
    run_lw_with_state(x, k, params, init, rng, &LloydOptions::default()).map(|(model, _)| model)
}

/// LW-k-means, also returning the raw sparse weights of the final state.
pub fn run_lw_with_state<R: Rng + ?Sized>(
    x: &DataMatrix,
    k: usize,
    params: &LwParams,
    init: InitMethod,
    rng: &mut R,
    opts: &LloydOptions,
) -> Result<(ClusterModel, LwState)> {
    params.validate()?;
    let z0 = init_centroids(x, k, init, rng)?;
    let mut rule = LwRule::new(x.n_cols(), params);
    let model = run_weighted_lloyd(x, k, z0, &mut rule, opts);
    let state = LwState {
        weights: rule.omega.clone(),
        centroids: model.centroids.clone(),
        labels: model.labels.clone(),
    };
    Ok((model, state))
}

fn subsample_indices<R: Rng + ?Sized>(n: usize, size: usize, rng: &mut R) -> Vec<usize> {
    let mut indices: Vec<usize> = (0..n).collect();
    for slot in 0..size {
        let pick = rng.random_range(slot..n);
        indices.swap(slot, pick);
    }
    let mut chosen = indices[..size].to_vec();
    chosen.sort_unstable();
    chosen
}

fn take_rows(x: &DataMatrix, indices: &[usize]) -> DataMatrix {
    let rows: Vec<Vec<f64>> = indices.iter().map(|&i| x.row(i).to_vec()).collect();
    DataMatrix::from_rows(&rows).expect("subsample of a valid matrix is valid")
}

/// Picks the sparsity penalty by subsampling stability: for each candidate
/// on an even grid over `[0, 1]`, repeatedly fits two half-subsamples and
/// scores how well the two labelings agree on the shared points. The
/// highest-scoring candidate wins, smaller `lambda` breaking ties. If no
/// candidate produces a single usable pair of fits, falls back to
/// [`lambda_fallback`] from 0.005.
pub fn lambda_stability_select<R: Rng + ?Sized>(
    x: &DataMatrix,
    k: usize,
    grid_size: usize,
    runs_per_lambda: usize,
    rng: &mut R,
) -> Result<f64> {
    if grid_size < 2 {
        return Err(Error::BadGrid { size: grid_size });
    }
    let n = x.n_rows();
    let half = n.div_ceil(2);

    let mut best: Option<(f64, f64)> = None; // (score, lambda)
    for j in 0..grid_size {
        let lambda = j as f64 / (grid_size - 1) as f64;
        let params = LwParams {
            lambda,
            ..LwParams::default()
        };
        let mut scores = Vec::new();
        for _ in 0..runs_per_lambda {
            let sub_a = subsample_indices(n, half, rng);
            let sub_b = subsample_indices(n, half, rng);
            let shared: Vec<usize> = {
                let in_b: HashSet<usize> = sub_b.iter().copied().collect();
                sub_a.iter().copied().filter(|i| in_b.contains(i)).collect()
            };
            if shared.len() < 2 {
                continue;
            }
            let fit = |indices: &[usize], rng: &mut R| -> Option<(Vec<usize>, ClusterModel)> {
                let sub = take_rows(x, indices);
                match run_lw(&sub, k, &params, InitMethod::UniformDistinct, rng) {
                    Ok(model) if !model.failed => Some((indices.to_vec(), model)),
                    _ => None,
                }
            };
            let (Some((idx_a, model_a)), Some((idx_b, model_b))) =
                (fit(&sub_a, rng), fit(&sub_b, rng))
            else {
                continue;
            };
            let restrict = |indices: &[usize], model: &ClusterModel| -> Labeling {
                let labels: Vec<usize> = shared
                    .iter()
                    .map(|i| {
                        let pos = indices.binary_search(i).expect("shared index is in subsample");
                        model.labels.get(pos)
                    })
                    .collect();
                Labeling::from_raw(labels, model.labels.k())
            };
            let la = restrict(&idx_a, &model_a);
            let lb = restrict(&idx_b, &model_b);
            scores.push(ari(&la, &lb).expect("restrictions share a length"));
        }
        if !scores.is_empty() {
            let score = scores.iter().sum::<f64>() / scores.len() as f64;
            let better = match best {
                None => true,
                Some((best_score, _)) => score > best_score,
            };
            if better {
                best = Some((score, lambda));
            }
        }
    }

    match best {
        Some((_, lambda)) => Ok(lambda),
        None => lambda_fallback(x, k, 0.005, rng),
    }
}

/// Walks the penalty down one decade at a time (`start`, `start / 10`, ...)
/// until some value yields a non-failed fit, trying a few seeds per value.
/// Gives up after eight decades below the start.
pub fn lambda_fallback<R: Rng + ?Sized>(
    x: &DataMatrix,
    k: usize,
    start_lambda: f64,
    rng: &mut R,
) -> Result<f64> {
    if !start_lambda.is_finite() || start_lambda < 0.0 {
        return Err(Error::NegativeLambda {
            value: start_lambda,
        });
    }
    const DECADES: usize = 8;
    const ATTEMPTS: usize = 3;
    let mut lambda = start_lambda;
    for _ in 0..=DECADES {
        let params = LwParams {
            lambda,
            ..LwParams::default()
        };
        for _ in 0..ATTEMPTS {
            let model = run_lw(x, k, &params, InitMethod::UniformDistinct, rng)?;
            if !model.failed {
                return Ok(lambda);
            }
        }
        lambda /= 10.0;
    }
    Err(Error::LambdaSearchExhausted {
        start: start_lambda,
        tried: DECADES + 1,
    })
}
