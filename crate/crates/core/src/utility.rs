//! Deterministic score functions over training subsets, evaluated on a
//! held-out test set.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, TestSet};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Euclidean,
    Manhattan,
    Cosine,
}

impl Metric {
    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Metric::Euclidean => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            Metric::Manhattan => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
            Metric::Cosine => {
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
                let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
                if na == 0.0 || nb == 0.0 {
                    // zero vectors rank at the very bottom instead of NaN
                    f64::INFINITY
                } else {
                    1.0 - dot / (na * nb)
                }
            }
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Metric::Euclidean => "euclidean",
            Metric::Manhattan => "manhattan",
            Metric::Cosine => "cosine",
        };
        f.write_str(name)
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(Metric::Euclidean),
            "manhattan" => Ok(Metric::Manhattan),
            "cosine" => Ok(Metric::Cosine),
            other => Err(Error::InvalidConfig(format!("unknown metric `{other}`"))),
        }
    }
}

/// A deterministic score function over index subsets of one training set.
/// Implementations must accept the subset ids in any order and be safe to
/// call concurrently.
pub trait Utility: Sync {
    fn eval(&self, subset: &[usize]) -> f64;

    fn describe(&self) -> String {
        "custom".to_string()
    }
}

/// Rank the subset by `(distance to the test point, id)` ascending and
/// return the fraction of the first `min(K, |S|)` neighbors matching the
/// test label, divided by `K`. The empty subset scores 0 (an empty sum).
pub fn knn_score_single(
    train: &Dataset,
    subset: &[usize],
    test_features: &[f64],
    test_label: usize,
    k: usize,
    metric: Metric,
) -> Result<f64> {
    if test_features.len() != train.dim() {
        return Err(Error::DimensionMismatch);
    }
    let mut ranked: Vec<(f64, usize)> = subset
        .iter()
        .map(|&id| (metric.distance(train.features(id), test_features), id))
        .collect();
    ranked.sort_by(|a, b| a.partial_cmp(b).expect("distances are never NaN"));
    let hits = ranked
        .iter()
        .take(k)
        .filter(|&&(_, id)| train.label(id) == test_label)
        .count();
    Ok(hits as f64 / k as f64)
}

/// Mean of `knn_score_single` over the test set.
pub fn knn_utility(
    train: &Dataset,
    subset: &[usize],
    test: &TestSet,
    k: usize,
    metric: Metric,
) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    let mut total = 0.0;
    for tp in test.points() {
        total += knn_score_single(train, subset, &tp.features, tp.label, k, metric)?;
    }
    Ok(total / test.len() as f64)
}

/// Nearest-centroid accuracy: each label present in the subset gets the
/// mean of its subset features as centroid; prediction is the euclidean
/// argmin with ties to the smaller label. The empty subset scores
/// `empty_score`. Duplicating the subset leaves every centroid unchanged.
pub fn centroid_utility(
    train: &Dataset,
    subset: &[usize],
    test: &TestSet,
    empty_score: f64,
) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    if subset.is_empty() {
        return Ok(empty_score);
    }
    let dim = train.dim();
    let mut sums: Vec<Vec<f64>> = vec![Vec::new(); train.num_classes()];
    let mut counts = vec![0usize; train.num_classes()];
    for &id in subset {
        let label = train.label(id);
        if sums[label].is_empty() {
            sums[label] = vec![0.0; dim];
        }
        for (acc, x) in sums[label].iter_mut().zip(train.features(id)) {
            *acc += x;
        }
        counts[label] += 1;
    }
    let centroids: Vec<(usize, Vec<f64>)> = sums
        .into_iter()
        .enumerate()
        .filter(|(label, _)| counts[*label] > 0)
        .map(|(label, sum)| {
            let c = sum.iter().map(|x| x / counts[label] as f64).collect();
            (label, c)
        })
        .collect();

    let mut correct = 0usize;
    for tp in test.points() {
        let mut best_label = usize::MAX;
        let mut best_dist = f64::INFINITY;
        for (label, centroid) in &centroids {
            let d = Metric::Euclidean.distance(centroid, &tp.features);
            // strict < keeps the smaller label on ties (labels ascend)
            if d < best_dist {
                best_dist = d;
                best_label = *label;
            }
        }
        if best_label == tp.label {
            correct += 1;
        }
    }
    Ok(correct as f64 / test.len() as f64)
}

/// KNN accuracy utility with per-test-point distances cached up front.
pub struct KnnUtility {
    train: Dataset,
    k: usize,
    metric: Metric,
    empty_score: f64,
    /// per test point: (label, training distances ranked later per subset)
    test_points: Vec<(usize, Vec<f64>)>,
}

impl KnnUtility {
    pub fn new(
        train: Dataset,
        test: TestSet,
        k: usize,
        metric: Metric,
        empty_score: f64,
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidConfig("knn k must be at least 1".into()));
        }
        if test.is_empty() {
            return Err(Error::EmptyTestSet);
        }
        if test.dim() != train.dim() {
            return Err(Error::DimensionMismatch);
        }
        let test_points = test
            .points()
            .iter()
            .map(|tp| {
                let dists = train
                    .points()
                    .iter()
                    .map(|p| metric.distance(&p.features, &tp.features))
                    .collect();
                (tp.label, dists)
            })
            .collect();
        Ok(Self {
            train,
            k,
            metric,
            empty_score,
            test_points,
        })
    }
}

impl Utility for KnnUtility {
    fn eval(&self, subset: &[usize]) -> f64 {
        if subset.is_empty() {
            return self.empty_score;
        }
        let mut total = 0.0;
        let mut ranked: Vec<(f64, usize)> = Vec::with_capacity(subset.len());
        for (label, dists) in &self.test_points {
            ranked.clear();
            ranked.extend(subset.iter().map(|&id| (dists[id], id)));
            ranked.sort_by(|a, b| a.partial_cmp(b).expect("distances are never NaN"));
            let hits = ranked
                .iter()
                .take(self.k)
                .filter(|&&(_, id)| self.train.label(id) == *label)
                .count();
            total += hits as f64 / self.k as f64;
        }
        total / self.test_points.len() as f64
    }

    fn describe(&self) -> String {
        format!(
            "knn(k={}, metric={}, empty_score={})",
            self.k, self.metric, self.empty_score
        )
    }
}

/// Nearest-centroid accuracy utility.
pub struct CentroidUtility {
    train: Dataset,
    test: TestSet,
    empty_score: f64,
}

impl CentroidUtility {
    pub fn new(train: Dataset, test: TestSet, empty_score: f64) -> Result<Self> {
        if test.is_empty() {
            return Err(Error::EmptyTestSet);
        }
        if test.dim() != train.dim() {
            return Err(Error::DimensionMismatch);
        }
        Ok(Self {
            train,
            test,
            empty_score,
        })
    }
}

impl Utility for CentroidUtility {
    fn eval(&self, subset: &[usize]) -> f64 {
        centroid_utility(&self.train, subset, &self.test, self.empty_score)
            .expect("validated at construction")
    }

    fn describe(&self) -> String {
        format!("centroid(empty_score={})", self.empty_score)
    }
}

/// An explicit game: one score per subset bitmask. Exists to feed the exact
/// oracles with arbitrary hand-crafted or randomized games in tests.
pub struct TableUtility {
    n: usize,
    scores: Vec<f64>,
}

impl TableUtility {
    pub const MAX_N: usize = 20;

    pub fn new(n: usize, scores: Vec<f64>) -> Result<Self> {
        if n > Self::MAX_N {
            return Err(Error::TooLarge {
                n,
                cap: Self::MAX_N,
            });
        }
        if scores.len() != 1 << n {
            return Err(Error::SizeMismatch {
                expected: 1 << n,
                got: scores.len(),
            });
        }
        Ok(Self { n, scores })
    }

    /// A random game with scores in `[0, 1)`.
    pub fn random<R: rand::Rng>(n: usize, rng: &mut R) -> Result<Self> {
        if n > Self::MAX_N {
            return Err(Error::TooLarge {
                n,
                cap: Self::MAX_N,
            });
        }
        let scores = (0..1usize << n).map(|_| rng.random::<f64>()).collect();
        Self::new(n, scores)
    }

    /// An additive game `v(S) = sum of per-point contributions`.
    pub fn additive(contributions: &[f64]) -> Result<Self> {
        let n = contributions.len();
        if n > Self::MAX_N {
            return Err(Error::TooLarge {
                n,
                cap: Self::MAX_N,
            });
        }
        let scores = (0..1usize << n)
            .map(|mask| {
                contributions
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask >> i & 1 == 1)
                    .map(|(_, c)| c)
                    .sum()
            })
            .collect();
        Self::new(n, scores)
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

impl Utility for TableUtility {
    fn eval(&self, subset: &[usize]) -> f64 {
        let mask = subset.iter().fold(0usize, |acc, &id| {
            debug_assert!(id < self.n);
            acc | 1 << id
        });
        self.scores[mask]
    }

    fn describe(&self) -> String {
        format!("table(n={})", self.n)
    }
}
