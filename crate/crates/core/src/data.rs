//! Dataset containers, column normalization, and the weighted distance that
//! every algorithm in this crate shares.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Tolerance used when checking that a weight vector sums to one.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// Row-major matrix of feature values: one row per point, one column per
/// feature. All entries are finite by construction.
#[derive(Clone, Debug, PartialEq)]
pub struct DataMatrix {
    values: Vec<f64>,
    rows: usize,
    cols: usize,
}

impl DataMatrix {
    /// Builds a matrix from a flat row-major buffer.
    pub fn from_vec(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyMatrix);
        }
        if values.len() != rows * cols {
            return Err(Error::BadShape {
                expected: rows * cols,
                found: values.len(),
            });
        }
        if let Some(idx) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: idx / cols,
                col: idx % cols,
            });
        }
        Ok(Self { values, rows, cols })
    }

    /// Builds a matrix from per-point rows, which must all share one length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyMatrix);
        }
        let cols = rows[0].len();
        for r in rows {
            if r.len() != cols {
                return Err(Error::BadShape {
                    expected: cols,
                    found: r.len(),
                });
            }
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::from_vec(rows.len(), cols, flat)
    }

    /// Number of data points.
    pub fn n_rows(&self) -> usize {
        self.rows
    }

    /// Number of features.
    pub fn n_cols(&self) -> usize {
        self.cols
    }

    /// Value at point `i`, feature `v`.
    #[inline]
    pub fn get(&self, i: usize, v: usize) -> f64 {
        self.values[i * self.cols + v]
    }

    /// The full feature vector of point `i`.
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    /// Iterator over point rows.
    pub fn rows_iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.values.chunks_exact(self.cols)
    }

    /// Iterator over the values of feature `v`.
    pub fn column(&self, v: usize) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().skip(v).step_by(self.cols).copied()
    }

    /// A copy of this matrix with extra columns appended on the right.
    /// Each new column must have one value per existing row.
    pub fn with_appended_columns(&self, extra: &[Vec<f64>]) -> Result<Self> {
        for col in extra {
            if col.len() != self.rows {
                return Err(Error::LengthMismatch {
                    left: self.rows,
                    right: col.len(),
                });
            }
        }
        let new_cols = self.cols + extra.len();
        let mut values = Vec::with_capacity(self.rows * new_cols);
        for i in 0..self.rows {
            values.extend_from_slice(self.row(i));
            values.extend(extra.iter().map(|col| col[i]));
        }
        Self::from_vec(self.rows, new_cols, values)
    }
}

/// A hard assignment of every point to one of `k` clusters.
///
/// Clusters are allowed to be empty here; algorithms that cannot tolerate an
/// empty cluster check [`Labeling::has_empty_cluster`] and bail out.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Labeling {
    assign: Vec<usize>,
    k: usize,
}

impl Labeling {
    /// Validates that every label lies in `0..k`.
    pub fn new(assign: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::ZeroClusters);
        }
        for (position, &label) in assign.iter().enumerate() {
            if label >= k {
                return Err(Error::LabelOutOfRange { position, label, k });
            }
        }
        Ok(Self { assign, k })
    }

    /// Internal constructor for labelings that are valid by construction.
    pub(crate) fn from_raw(assign: Vec<usize>, k: usize) -> Self {
        debug_assert!(k >= 1 && assign.iter().all(|&l| l < k));
        Self { assign, k }
    }

    /// Number of clusters this labeling ranges over.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of labeled points.
    pub fn len(&self) -> usize {
        self.assign.len()
    }

    /// True when no points are labeled.
    pub fn is_empty(&self) -> bool {
        self.assign.is_empty()
    }

    /// Cluster index of point `i`.
    #[inline]
    pub fn get(&self, i: usize) -> usize {
        self.assign[i]
    }

    /// All labels in point order.
    pub fn as_slice(&self) -> &[usize] {
        &self.assign
    }

    /// Member count per cluster.
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.k];
        for &l in &self.assign {
            sizes[l] += 1;
        }
        sizes
    }

    /// True if some cluster has no members.
    pub fn has_empty_cluster(&self) -> bool {
        self.cluster_sizes().contains(&0)
    }
}

/// `k` cluster centers over `dim` features, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Centroids {
    values: Vec<f64>,
    k: usize,
    dim: usize,
}

impl Centroids {
    /// Builds centroids from a flat row-major buffer of finite values.
    pub fn from_vec(k: usize, dim: usize, values: Vec<f64>) -> Result<Self> {
        if k == 0 {
            return Err(Error::ZeroClusters);
        }
        if dim == 0 {
            return Err(Error::EmptyMatrix);
        }
        if values.len() != k * dim {
            return Err(Error::BadShape {
                expected: k * dim,
                found: values.len(),
            });
        }
        if let Some(idx) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: idx / dim,
                col: idx % dim,
            });
        }
        Ok(Self { values, k, dim })
    }

    /// Builds centroids from per-cluster rows of equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::ZeroClusters);
        }
        let dim = rows[0].len();
        for r in rows {
            if r.len() != dim {
                return Err(Error::BadShape {
                    expected: dim,
                    found: r.len(),
                });
            }
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::from_vec(rows.len(), dim, flat)
    }

    /// Number of centers.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of features per center.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Center `t` as a feature slice.
    #[inline]
    pub fn row(&self, t: usize) -> &[f64] {
        &self.values[t * self.dim..(t + 1) * self.dim]
    }

    /// Value of center `t` at feature `v`.
    #[inline]
    pub fn get(&self, t: usize, v: usize) -> f64 {
        self.values[t * self.dim + v]
    }
}

/// Non-negative per-feature weights summing to one.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightVector {
    w: Vec<f64>,
}

impl WeightVector {
    /// Validates non-negativity and normalization (within [`SIMPLEX_TOL`]).
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::EmptyWeights);
        }
        for (index, &value) in w.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::NegativeWeight { index, value });
            }
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::WeightsNotNormalized { sum });
        }
        Ok(Self { w })
    }

    /// Uniform weights `1/m` over `m` features.
    pub fn uniform(m: usize) -> Self {
        assert!(m >= 1, "weight vector needs at least one feature");
        Self {
            w: vec![1.0 / m as f64; m],
        }
    }

    /// Internal constructor for weights normalized by construction.
    pub(crate) fn from_normalized(w: Vec<f64>) -> Self {
        debug_assert!(!w.is_empty());
        debug_assert!(w.iter().all(|&v| v >= 0.0));
        debug_assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-6);
        Self { w }
    }

    /// Number of features.
    pub fn len(&self) -> usize {
        self.w.len()
    }

    /// True when the vector has no entries (never holds for a valid value).
    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    /// Weight of feature `v`.
    #[inline]
    pub fn get(&self, v: usize) -> f64 {
        self.w[v]
    }

    /// All weights in feature order.
    pub fn as_slice(&self) -> &[f64] {
        &self.w
    }
}

/// Column preprocessing applied before fitting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    /// Center by the column mean and divide by the column range.
    Range,
    /// Center by the column mean and divide by the population standard
    /// deviation.
    #[serde(rename = "zscore")]
    ZScore,
    /// Leave the data untouched.
    None,
}

impl Normalization {
    /// Applies this normalization column by column.
    pub fn apply(self, x: &DataMatrix) -> DataMatrix {
        match self {
            Normalization::Range => range_normalize(x),
            Normalization::ZScore => zscore_normalize(x),
            Normalization::None => x.clone(),
        }
    }
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Normalization::Range => "range",
            Normalization::ZScore => "zscore",
            Normalization::None => "none",
        };
        f.write_str(s)
    }
}

impl FromStr for Normalization {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "range" => Ok(Normalization::Range),
            "zscore" => Ok(Normalization::ZScore),
            "none" => Ok(Normalization::None),
            other => Err(format!(
                "unknown normalization '{other}' (expected range, zscore, or none)"
            )),
        }
    }
}

fn column_mean(x: &DataMatrix, v: usize) -> f64 {
    x.column(v).sum::<f64>() / x.n_rows() as f64
}

/// Centers each column on its mean and divides by its range (`max - min`).
/// Constant columns come out as all zeros.
pub fn range_normalize(x: &DataMatrix) -> DataMatrix {
    let (n, m) = (x.n_rows(), x.n_cols());
    let mut values = vec![0.0; n * m];
    for v in 0..m {
        let mean = column_mean(x, v);
        let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
        for val in x.column(v) {
            min = min.min(val);
            max = max.max(val);
        }
        let range = max - min;
        if range > 0.0 {
            for (i, val) in x.column(v).enumerate() {
                values[i * m + v] = (val - mean) / range;
            }
        }
    }
    DataMatrix::from_vec(n, m, values).expect("normalized copy keeps the input shape")
}

/// Centers each column on its mean and divides by its population standard
/// deviation (the `1/n` variant). Constant columns come out as all zeros.
pub fn zscore_normalize(x: &DataMatrix) -> DataMatrix {
    let (n, m) = (x.n_rows(), x.n_cols());
    let mut values = vec![0.0; n * m];
    for v in 0..m {
        let mean = column_mean(x, v);
        let var = x.column(v).map(|val| (val - mean).powi(2)).sum::<f64>() / n as f64;
        let std = var.sqrt();
        if std > 0.0 {
            for (i, val) in x.column(v).enumerate() {
                values[i * m + v] = (val - mean) / std;
            }
        }
    }
    DataMatrix::from_vec(n, m, values).expect("normalized copy keeps the input shape")
}

/// Feature-weighted squared Euclidean distance
/// `sum_v w_v * (x_v - z_v)^2`.
pub fn weighted_sqdist(x: &[f64], z: &[f64], w: &WeightVector) -> Result<f64> {
    if x.len() != z.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: z.len(),
        });
    }
    if x.len() != w.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: w.len(),
        });
    }
    Ok(weighted_sqdist_raw(x, z, w.as_slice()))
}

/// Hot-path variant without shape checks; callers guarantee equal lengths.
#[inline]
pub(crate) fn weighted_sqdist_raw(x: &[f64], z: &[f64], w: &[f64]) -> f64 {
    let mut acc = 0.0;
    for v in 0..x.len() {
        let d = x[v] - z[v];
        acc += w[v] * d * d;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn column_vec(x: &DataMatrix, v: usize) -> Vec<f64> {
        x.column(v).collect()
    }

    #[test]
    fn from_vec_rejects_bad_shapes_and_values() {
        assert_eq!(
            DataMatrix::from_vec(0, 2, vec![]).unwrap_err(),
            Error::EmptyMatrix
        );
        assert_eq!(
            DataMatrix::from_vec(2, 2, vec![1.0, 2.0, 3.0]).unwrap_err(),
            Error::BadShape {
                expected: 4,
                found: 3
            }
        );
        assert_eq!(
            DataMatrix::from_vec(2, 2, vec![1.0, 2.0, f64::NAN, 4.0]).unwrap_err(),
            Error::NonFinite { row: 1, col: 0 }
        );
    }

    #[test]
    fn row_and_column_access() {
        let x = DataMatrix::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(x.row(1), &[4.0, 5.0, 6.0]);
        assert_eq!(x.get(0, 2), 3.0);
        assert_eq!(column_vec(&x, 1), vec![2.0, 5.0]);
    }

    #[test]
    fn append_columns_extends_rows() {
        let x = DataMatrix::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let y = x.with_appended_columns(&[vec![9.0, 8.0]]).unwrap();
        assert_eq!(y.n_cols(), 3);
        assert_eq!(y.row(0), &[1.0, 2.0, 9.0]);
        assert_eq!(y.row(1), &[3.0, 4.0, 8.0]);
    }

    #[test]
    fn labeling_validates_range_and_counts_sizes() {
        let l = Labeling::new(vec![0, 0, 1, 2], 3).unwrap();
        assert_eq!(l.cluster_sizes(), vec![2, 1, 1]);
        assert!(!l.has_empty_cluster());

        let gap = Labeling::new(vec![0, 0, 2], 3).unwrap();
        assert!(gap.has_empty_cluster());

        assert_eq!(
            Labeling::new(vec![0, 3], 3).unwrap_err(),
            Error::LabelOutOfRange {
                position: 1,
                label: 3,
                k: 3
            }
        );
        assert_eq!(Labeling::new(vec![], 0).unwrap_err(), Error::ZeroClusters);
    }

    #[test]
    fn weight_vector_enforces_simplex() {
        let w = WeightVector::new(vec![0.25, 0.75]).unwrap();
        assert_eq!(w.as_slice(), &[0.25, 0.75]);

        let u = WeightVector::uniform(4);
        assert_eq!(u.as_slice(), &[0.25; 4]);

        assert!(matches!(
            WeightVector::new(vec![0.5, -0.1, 0.6]).unwrap_err(),
            Error::NegativeWeight { index: 1, .. }
        ));
        assert!(matches!(
            WeightVector::new(vec![0.5, 0.6]).unwrap_err(),
            Error::WeightsNotNormalized { .. }
        ));
        assert_eq!(WeightVector::new(vec![]).unwrap_err(), Error::EmptyWeights);
    }

    #[test]
    fn range_normalize_symmetric_column() {
        let x = DataMatrix::from_vec(3, 1, vec![-1.0, 0.0, 1.0]).unwrap();
        let y = range_normalize(&x);
        assert_eq!(column_vec(&y, 0), vec![-0.5, 0.0, 0.5]);
    }

    #[test]
    fn range_normalize_asymmetric_column() {
        // mean = 4/3, range = 3
        let x = DataMatrix::from_vec(3, 1, vec![0.0, 1.0, 3.0]).unwrap();
        let y = range_normalize(&x);
        let expect = [-4.0 / 9.0, -1.0 / 9.0, 5.0 / 9.0];
        for (got, want) in y.column(0).zip(expect) {
            assert!((got - want).abs() < 1e-15, "got {got}, want {want}");
        }
    }

    #[test]
    fn range_normalize_constant_column_is_zero() {
        let x = DataMatrix::from_vec(3, 2, vec![5.0, 1.0, 5.0, 2.0, 5.0, 3.0]).unwrap();
        let y = range_normalize(&x);
        assert_eq!(column_vec(&y, 0), vec![0.0, 0.0, 0.0]);
        assert_eq!(column_vec(&y, 1), vec![-0.5, 0.0, 0.5]);
    }

    #[test]
    fn zscore_normalize_unit_population_std() {
        let x = DataMatrix::from_vec(3, 1, vec![-1.0, 0.0, 1.0]).unwrap();
        let y = zscore_normalize(&x);
        let s = (1.5f64).sqrt();
        let got = column_vec(&y, 0);
        assert!((got[0] + s).abs() < 1e-15);
        assert!(got[1].abs() < 1e-15);
        assert!((got[2] - s).abs() < 1e-15);

        // Standardized data stays put.
        let z = zscore_normalize(&y);
        for (a, b) in z.column(0).zip(y.column(0)) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zscore_constant_column_is_zero() {
        let x = DataMatrix::from_vec(2, 1, vec![7.0, 7.0]).unwrap();
        let y = zscore_normalize(&x);
        assert_eq!(column_vec(&y, 0), vec![0.0, 0.0]);
    }

    #[test]
    fn weighted_sqdist_matches_hand_computation() {
        let w = WeightVector::new(vec![0.25, 0.75]).unwrap();
        let d = weighted_sqdist(&[1.0, 2.0], &[0.0, 0.0], &w).unwrap();
        assert!((d - 3.25).abs() < 1e-15);

        let zero = weighted_sqdist(&[1.0, 2.0], &[1.0, 2.0], &w).unwrap();
        assert_eq!(zero, 0.0);

        assert_eq!(
            weighted_sqdist(&[1.0], &[0.0, 0.0], &w).unwrap_err(),
            Error::LengthMismatch { left: 1, right: 2 }
        );
    }

    #[test]
    fn normalization_parses_and_prints() {
        assert_eq!("range".parse::<Normalization>(), Ok(Normalization::Range));
        assert_eq!("zscore".parse::<Normalization>(), Ok(Normalization::ZScore));
        assert_eq!("none".parse::<Normalization>(), Ok(Normalization::None));
        assert!("minmax".parse::<Normalization>().is_err());
        assert_eq!(Normalization::Range.to_string(), "range");
    }
}
