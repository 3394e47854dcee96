//! Scoring and selection: adjusted Rand index, best-of-restarts, and mean
//! relative ranks across benchmark configurations.

use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use crate::data::Labeling;
use crate::error::{Error, Result};

/// The clustering algorithms the benchmark compares.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    /// Plain k-means with squared-distance-proportional seeding.
    #[serde(rename = "kmeans_pp")]
    KMeansPP,
    /// Feature weighting by between/within separation ratios.
    #[serde(rename = "fwsa")]
    Fwsa,
    /// Sparse feature weighting with a soft-threshold penalty.
    #[serde(rename = "lw")]
    Lw,
    /// Shapley-reweighted k-means.
    #[serde(rename = "shark")]
    Shark,
}

impl Algorithm {
    /// Every algorithm, in canonical presentation order.
    pub const ALL: [Algorithm; 4] = [
        Algorithm::KMeansPP,
        Algorithm::Fwsa,
        Algorithm::Lw,
        Algorithm::Shark,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::KMeansPP => "kmeans_pp",
            Algorithm::Fwsa => "fwsa",
            Algorithm::Lw => "lw",
            Algorithm::Shark => "shark",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "kmeans_pp" | "kmeans++" | "kmeans" => Ok(Algorithm::KMeansPP),
            "fwsa" => Ok(Algorithm::Fwsa),
            "lw" => Ok(Algorithm::Lw),
            "shark" => Ok(Algorithm::Shark),
            other => Err(format!(
                "unknown algorithm '{other}' (expected kmeans_pp, fwsa, lw, or shark)"
            )),
        }
    }
}

/// One fit of one algorithm on one dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub algorithm: Algorithm,
    pub dataset: String,
    pub seed: u64,
    /// Agreement with the reference labeling.
    pub ari: f64,
    /// The algorithm's own objective; restart selection minimizes this.
    pub objective: f64,
    pub failed: bool,
    pub wall_time: Duration,
}

/// How the representative run is chosen from a restart batch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionCriterion {
    /// Keep the non-failed run with the smallest objective.
    LowestObjective,
}

/// Summary of one (dataset configuration, algorithm) cell. `None` scores
/// mean every replicate of the configuration failed outright.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AggregateResult {
    pub mean_ari: Option<f64>,
    pub std_ari: Option<f64>,
    /// Rank of this algorithm within its configuration row (1 = best),
    /// ties averaged; `None` when the row could not be ranked.
    pub per_algorithm_rank: Option<f64>,
    pub n_runs: usize,
    pub n_failures: usize,
}

fn canonical_labels(l: &Labeling) -> Vec<usize> {
    let mut remap: HashMap<usize, usize> = HashMap::new();
    l.as_slice()
        .iter()
        .map(|&label| {
            let next = remap.len();
            *remap.entry(label).or_insert(next)
        })
        .collect()
}

/// Adjusted Rand index between two labelings of the same points: 1 for
/// identical partitions, about 0 for independent ones, negative for worse
/// than chance. When the correction term is degenerate (both partitions
/// all-singletons or both one single block, where raw agreement carries no
/// information) the value is 1 for identical partitions and 0 otherwise.
pub fn ari(a: &Labeling, b: &Labeling) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let n = a.len();
    let comb2 = |x: f64| x * (x - 1.0) / 2.0;
    let n_pairs = comb2(n as f64);
    if n_pairs == 0.0 {
        // Zero or one point: the partitions agree trivially.
        return Ok(1.0);
    }

    let (ka, kb) = (a.k(), b.k());
    let mut counts = vec![0u64; ka * kb];
    for i in 0..n {
        counts[a.get(i) * kb + b.get(i)] += 1;
    }
    let index: f64 = counts.iter().map(|&c| comb2(c as f64)).sum();
    let mut row_sums = vec![0u64; ka];
    let mut col_sums = vec![0u64; kb];
    for ra in 0..ka {
        for cb in 0..kb {
            row_sums[ra] += counts[ra * kb + cb];
            col_sums[cb] += counts[ra * kb + cb];
        }
    }
    let sum_a: f64 = row_sums.iter().map(|&c| comb2(c as f64)).sum();
    let sum_b: f64 = col_sums.iter().map(|&c| comb2(c as f64)).sum();
    let expected = sum_a * sum_b / n_pairs;
    let max_index = 0.5 * (sum_a + sum_b);
    if max_index == expected {
        return Ok(if canonical_labels(a) == canonical_labels(b) {
            1.0
        } else {
            0.0
        });
    }
    Ok((index - expected) / (max_index - expected))
}

/// Picks the representative run out of a restart batch, skipping failed
/// runs. Ties on the criterion keep the earliest run. Errors when every run
/// failed.
pub fn best_of_runs(
    records: &[RunRecord],
    criterion: SelectionCriterion,
) -> Result<&RunRecord> {
    let SelectionCriterion::LowestObjective = criterion;
    let mut best: Option<&RunRecord> = None;
    for r in records.iter().filter(|r| !r.failed) {
        best = match best {
            Some(b) if r.objective < b.objective => Some(r),
            None => Some(r),
            keep => keep,
        };
    }
    best.ok_or(Error::AllRunsFailed)
}

/// Ranks one configuration row by score, rank 1 for the highest score and
/// exact ties sharing the average of the positions they span.
pub fn rank_row(row: &[(Algorithm, f64)]) -> Vec<(Algorithm, f64)> {
    let mut order: Vec<usize> = (0..row.len()).collect();
    order.sort_by(|&i, &j| row[j].1.total_cmp(&row[i].1));
    let mut ranks = vec![0.0f64; row.len()];
    let mut pos = 0;
    while pos < order.len() {
        let mut end = pos + 1;
        while end < order.len() && row[order[end]].1 == row[order[pos]].1 {
            end += 1;
        }
        // Positions pos+1 ..= end, one-based, shared evenly.
        let shared = (pos + 1 + end) as f64 / 2.0;
        for &i in &order[pos..end] {
            ranks[i] = shared;
        }
        pos = end;
    }
    row.iter().zip(ranks).map(|(&(alg, _), r)| (alg, r)).collect()
}

/// Averages per-row ranks across configuration rows. Every row must score
/// exactly the same set of algorithms. Output follows the canonical
/// algorithm order.
pub fn mean_relative_rank(rows: &[Vec<(Algorithm, f64)>]) -> Result<Vec<(Algorithm, f64)>> {
    let Some(first) = rows.first() else {
        return Ok(Vec::new());
    };
    let mut algs: Vec<Algorithm> = first.iter().map(|&(a, _)| a).collect();
    algs.sort_unstable();

    for (rownum, row) in rows.iter().enumerate() {
        let present: HashSet<Algorithm> = row.iter().map(|&(a, _)| a).collect();
        if present.len() != row.len() || row.len() != algs.len() {
            let missing = algs
                .iter()
                .find(|a| !present.contains(a))
                .copied()
                .unwrap_or(algs[0]);
            return Err(Error::IncompleteRankTable {
                row: rownum,
                algorithm: missing.to_string(),
            });
        }
        for alg in &algs {
            if !present.contains(alg) {
                return Err(Error::IncompleteRankTable {
                    row: rownum,
                    algorithm: alg.to_string(),
                });
            }
        }
    }

    let mut sums: HashMap<Algorithm, f64> = HashMap::new();
    for row in rows {
        for (alg, rank) in rank_row(row) {
            *sums.entry(alg).or_insert(0.0) += rank;
        }
    }
    Ok(algs
        .iter()
        .map(|&a| (a, sums[&a] / rows.len() as f64))
        .collect())
}
