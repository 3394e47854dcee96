//! Synthetic benchmark data: isotropic Gaussian mixtures with known labels,
//! optionally padded with uniform-noise features that carry no cluster
//! signal.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::{DataMatrix, Labeling};
use crate::error::{Error, Result};

fn default_min_cluster_size() -> usize {
    20
}

/// Shape and randomness of one synthetic dataset.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    /// Number of points.
    pub n: usize,
    /// Number of informative features.
    pub m: usize,
    /// Number of mixture components.
    pub k: usize,
    /// Noise features to append, as a fraction of `m` (rounded).
    #[serde(default)]
    pub noise_fraction: f64,
    /// Every component keeps at least this many points.
    #[serde(default = "default_min_cluster_size")]
    pub min_cluster_size: usize,
    #[serde(default)]
    pub seed: u64,
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 {
            return Err(Error::EmptyMatrix);
        }
        if self.k == 0 {
            return Err(Error::ZeroClusters);
        }
        if !self.noise_fraction.is_finite() || self.noise_fraction < 0.0 {
            return Err(Error::BadNoiseFraction {
                value: self.noise_fraction,
            });
        }
        if self.n < self.k * self.min_cluster_size {
            return Err(Error::InfeasibleClusterSizes {
                n: self.n,
                k: self.k,
                min_size: self.min_cluster_size,
            });
        }
        Ok(())
    }

    /// Compact shape label, e.g. `1000x10-3k` or `1000x10-3k+5NF`.
    pub fn label(&self) -> String {
        let base = format!("{}x{}-{}k", self.n, self.m, self.k);
        let noise = (self.noise_fraction * self.m as f64).round() as usize;
        if noise > 0 {
            format!("{base}+{noise}NF")
        } else {
            base
        }
    }
}

/// A dataset with its generating labels and a marker for which columns are
/// informative (true) versus appended noise (false).
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    pub x: DataMatrix,
    pub truth: Labeling,
    pub informative_mask: Vec<bool>,
}

/// Splits `n` points over `k` clusters proportionally to the drawn weights,
/// then repairs the result until every cluster holds at least `min_size`
/// points by moving one point at a time from the currently largest cluster.
fn proportional_sizes(n: usize, k: usize, min_size: usize, props: &[f64]) -> Vec<usize> {
    let total: f64 = props.iter().sum();
    let mut sizes: Vec<usize> = props
        .iter()
        .map(|p| ((p / total) * n as f64).floor() as usize)
        .collect();
    let mut assigned: usize = sizes.iter().sum();
    let mut next = 0;
    while assigned < n {
        sizes[next % k] += 1;
        assigned += 1;
        next += 1;
    }
    loop {
        let (mut small, mut big) = (0, 0);
        for (l, &s) in sizes.iter().enumerate() {
            if s < sizes[small] {
                small = l;
            }
            if s > sizes[big] {
                big = l;
            }
        }
        if sizes[small] >= min_size {
            break;
        }
        sizes[big] -= 1;
        sizes[small] += 1;
    }
    sizes
}

/// Generates an isotropic Gaussian mixture: component centers are standard
/// normal, each component gets one variance drawn uniformly from
/// `[0.5, 1.5]`, and component sizes follow uniform proportions subject to
/// the minimum-size floor. Points are emitted in label order. When
/// `noise_fraction > 0` the configured noise columns are appended from the
/// same random stream.
pub fn generate_mixture(cfg: &SynthConfig) -> Result<LabeledDataset> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (n, m, k) = (cfg.n, cfg.m, cfg.k);

    let centers: Vec<f64> = (0..k * m).map(|_| rng.sample(StandardNormal)).collect();
    let variances: Vec<f64> = (0..k).map(|_| rng.random_range(0.5..1.5)).collect();
    let props: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
    let sizes = proportional_sizes(n, k, cfg.min_cluster_size, &props);

    let mut values = Vec::with_capacity(n * m);
    let mut truth = Vec::with_capacity(n);
    for (l, &size) in sizes.iter().enumerate() {
        let sigma = variances[l].sqrt();
        for _ in 0..size {
            for v in 0..m {
                let e: f64 = rng.sample(StandardNormal);
                values.push(centers[l * m + v] + sigma * e);
            }
            truth.push(l);
        }
    }

    let dataset = LabeledDataset {
        x: DataMatrix::from_vec(n, m, values)?,
        truth: Labeling::new(truth, k)?,
        informative_mask: vec![true; m],
    };
    if cfg.noise_fraction > 0.0 {
        inject_noise(&dataset, cfg.noise_fraction, &mut rng)
    } else {
        Ok(dataset)
    }
}

/// Appends `round(noise_fraction * m)` uniform `[0, 1)` columns, where `m`
/// counts the informative columns of the input. Labels are untouched; the
/// new columns are marked non-informative. Columns are drawn one at a time,
/// top to bottom.
pub fn inject_noise<R: Rng + ?Sized>(
    dataset: &LabeledDataset,
    noise_fraction: f64,
    rng: &mut R,
) -> Result<LabeledDataset> {
    if !noise_fraction.is_finite() || noise_fraction < 0.0 {
        return Err(Error::BadNoiseFraction {
            value: noise_fraction,
        });
    }
    let informative = dataset.informative_mask.iter().filter(|&&b| b).count();
    let extra = (noise_fraction * informative as f64).round() as usize;
    let n = dataset.x.n_rows();
    let columns: Vec<Vec<f64>> = (0..extra)
        .map(|_| (0..n).map(|_| rng.random::<f64>()).collect())
        .collect();
    let mut informative_mask = dataset.informative_mask.clone();
    informative_mask.resize(informative_mask.len() + extra, false);
    Ok(LabeledDataset {
        x: dataset.x.with_appended_columns(&columns)?,
        truth: dataset.truth.clone(),
        informative_mask,
    })
}
