//! Exact KNN asymmetric data Shapley.
//!
//! For a KNN accuracy score the asymmetric values under an intra-class
//! uniform weight system admit a closed-form recursion per test point and
//! class: rank the class members `V` and the earlier-class members `U` by
//! distance, count for each V point the number `beta` of U points ranked
//! nearer, seed the recursion at the farthest V point, and walk inward
//! applying one of four cases determined by how `K` compares with the
//! neighboring beta counts. Averaging over the test set yields the exact
//! values without enumerating a single subset. The single-class case
//! (`U` empty, all beta zero) is the classical KNN data Shapley recursion.

use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

use crate::dataset::{Dataset, TestSet};
use crate::error::{Error, Result};
use crate::partition::OrderedPartition;
use crate::report::{Method, ReportMeta, ValueReport};
use crate::utility::Metric;

/// Below this class size binomials are computed exactly in integer
/// arithmetic; beyond it the coefficients overflow u64 and the ratio is
/// evaluated through log-gamma differences instead.
const EXACT_BINOMIAL_LIMIT: usize = 30;

/// Terms whose hypergeometric ratio underflows contribute nothing; skip
/// them instead of accumulating denormals.
const RATIO_UNDERFLOW: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KnnConfig {
    pub k: usize,
    pub metric: Metric,
    /// Score assigned to the empty training set, `v(empty)`.
    pub empty_score: f64,
}

impl KnnConfig {
    pub fn new(k: usize, metric: Metric, empty_score: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidConfig("knn k must be at least 1".into()));
        }
        Ok(Self {
            k,
            metric,
            empty_score,
        })
    }
}

/// Which recursion case applies to the neighboring pair at position `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StepCase {
    /// `K <= beta_i`: both points are crowded out, the difference is zero.
    Saturated,
    /// `beta_i == beta_{i+1} < K`: the label swap term alone.
    EqualBeta,
    /// `beta_i < beta_{i+1} < K`: label swap plus the hypergeometric
    /// correction over subsets where only the nearer point displaces a
    /// U neighbor.
    BetaStep,
    /// `beta_i < K <= beta_{i+1}`: the farther point never enters the
    /// neighbor list; the full hypergeometric double sum.
    BetaCrossesK,
}

/// `C(k, m) * C(cardV-2-k, i-1-m) / C(cardV-2, i-1)`, the probability
/// weight of splitting a size-`k` subset into `m` nearer and `k-m` farther
/// points. Out-of-range arguments yield 0.
pub fn hypergeom_ratio(k: usize, m: usize, card_v: usize, i: usize) -> f64 {
    if card_v < 2 || i < 1 {
        return 0.0;
    }
    let v2 = card_v - 2;
    let i1 = i - 1;
    if m > k || m > i1 || i1 > v2 || k > v2 || i1 - m > v2 - k {
        return 0.0;
    }
    if card_v <= EXACT_BINOMIAL_LIMIT {
        let num = binom_u128(k, m) * binom_u128(v2 - k, i1 - m);
        num as f64 / binom_u128(v2, i1) as f64
    } else {
        (ln_binom(k, m) + ln_binom(v2 - k, i1 - m) - ln_binom(v2, i1)).exp()
    }
}

fn binom_u128(n: usize, r: usize) -> u128 {
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for j in 0..r {
        acc = acc * (n - j) as u128 / (j + 1) as u128;
    }
    acc
}

fn ln_binom(n: usize, r: usize) -> f64 {
    if r == 0 || r == n {
        return 0.0;
    }
    ln_gamma(n as f64 + 1.0) - ln_gamma(r as f64 + 1.0) - ln_gamma((n - r) as f64 + 1.0)
}

/// Distance ranking of one class `V` against the union `U` of all earlier
/// classes, relative to a single test point. Positions are 1-based in the
/// recursion formulas; vectors here are 0-based.
#[derive(Debug, Clone)]
pub struct RankContext {
    /// Training ids of V ranked by `(distance, id)` ascending.
    v_ids: Vec<usize>,
    /// Labels aligned with `v_ids`.
    v_labels: Vec<usize>,
    /// Labels of U ranked by `(distance, id)` ascending.
    u_labels: Vec<usize>,
    /// Per ranked V position: number of U points ranked nearer.
    beta: Vec<usize>,
    test_label: usize,
}

impl RankContext {
    pub fn v_len(&self) -> usize {
        self.v_ids.len()
    }

    pub fn u_len(&self) -> usize {
        self.u_labels.len()
    }

    pub fn v_ids(&self) -> &[usize] {
        &self.v_ids
    }

    pub fn beta(&self) -> &[usize] {
        &self.beta
    }

    fn v_match(&self, pos: usize) -> f64 {
        (self.v_labels[pos] == self.test_label) as u8 as f64
    }

    /// 1 if the `rank`-th closest U point (1-based) exists and matches the
    /// test label. Ranks beyond `|U|` mean no neighbor was displaced.
    fn u_match(&self, rank: usize) -> f64 {
        if rank >= 1 && rank <= self.u_labels.len() {
            (self.u_labels[rank - 1] == self.test_label) as u8 as f64
        } else {
            0.0
        }
    }
}

/// Rank `U (union of classes below `class_index`) and `V = S_{class_index}`
/// by distance to the test point, breaking ties by ascending id.
pub fn build_rank_context(
    train: &Dataset,
    partition: &OrderedPartition,
    class_index: usize,
    test_features: &[f64],
    test_label: usize,
    metric: Metric,
) -> Result<RankContext> {
    if test_features.len() != train.dim() {
        return Err(Error::DimensionMismatch);
    }
    let v_ids_raw = partition.class(class_index)?;
    if v_ids_raw.is_empty() {
        return Err(Error::EmptyClass);
    }
    let u_ids = partition.prefix_ids(class_index);

    let mut joint: Vec<(f64, usize, bool)> = Vec::with_capacity(u_ids.len() + v_ids_raw.len());
    for &id in &u_ids {
        joint.push((metric.distance(train.features(id), test_features), id, true));
    }
    for &id in v_ids_raw {
        joint.push((
            metric.distance(train.features(id), test_features),
            id,
            false,
        ));
    }
    joint.sort_by(|a, b| {
        (a.0, a.1)
            .partial_cmp(&(b.0, b.1))
            .expect("distances are never NaN")
    });

    let mut v_ids = Vec::with_capacity(v_ids_raw.len());
    let mut v_labels = Vec::with_capacity(v_ids_raw.len());
    let mut u_labels = Vec::with_capacity(u_ids.len());
    let mut beta = Vec::with_capacity(v_ids_raw.len());
    let mut u_seen = 0usize;
    for (_, id, in_u) in joint {
        if in_u {
            u_seen += 1;
            u_labels.push(train.label(id));
        } else {
            v_ids.push(id);
            v_labels.push(train.label(id));
            beta.push(u_seen);
        }
    }
    debug_assert!(beta.windows(2).all(|w| w[0] <= w[1]));
    Ok(RankContext {
        v_ids,
        v_labels,
        u_labels,
        beta,
        test_label,
    })
}

/// Value of the farthest V point, the seed of the recursion. Only subsets
/// smaller than both `K - beta` and `|V|` contribute, and a U neighbor is
/// displaced only when the subset plus U already fills the neighbor list.
pub fn knn_ads_initial(ctx: &RankContext, k: usize) -> f64 {
    let v_len = ctx.v_len();
    let last = v_len - 1;
    let beta = ctx.beta[last];
    if k <= beta {
        return 0.0;
    }
    let reach = (k - beta).min(v_len);
    let scale = 1.0 / (k as f64 * v_len as f64);
    let mut value = ctx.v_match(last) * reach as f64 * scale;
    if ctx.u_len() > beta {
        let mut displaced = 0.0;
        for s in 0..reach {
            displaced += ctx.u_match(k - s);
        }
        value -= displaced * scale;
    }
    value
}

/// Classify the recursion step for the neighboring pair `(i, i+1)`,
/// 1-based positions in the V ranking.
pub fn step_case(ctx: &RankContext, k: usize, i: usize) -> Result<StepCase> {
    if i < 1 || i >= ctx.v_len() {
        return Err(Error::IndexOutOfRange(i));
    }
    let b_near = ctx.beta[i - 1];
    let b_far = ctx.beta[i];
    Ok(if k <= b_near {
        StepCase::Saturated
    } else if b_near == b_far {
        StepCase::EqualBeta
    } else if b_far < k {
        StepCase::BetaStep
    } else {
        StepCase::BetaCrossesK
    })
}

/// One recursion step: the value at position `i` given the value at
/// position `i+1` (1-based positions in the V ranking).
pub fn knn_ads_step(ctx: &RankContext, k: usize, i: usize, next_value: f64) -> Result<f64> {
    let diff = match step_case(ctx, k, i)? {
        StepCase::Saturated => 0.0,
        StepCase::EqualBeta => {
            let beta = ctx.beta[i - 1];
            let swap = (ctx.v_match(i - 1) - ctx.v_match(i)) / k as f64;
            swap * (k - beta).min(i) as f64 / i as f64
        }
        StepCase::BetaStep => {
            let b_near = ctx.beta[i - 1];
            let b_far = ctx.beta[i];
            let swap = (ctx.v_match(i - 1) - ctx.v_match(i)) / k as f64;
            let main = swap * (k - b_far).min(i) as f64 / i as f64;
            main + correction_sum(ctx, k, i, k - b_far, k - b_near - 1)
        }
        StepCase::BetaCrossesK => {
            let b_near = ctx.beta[i - 1];
            correction_sum(ctx, k, i, 0, k - b_near - 1)
        }
    };
    Ok(next_value + diff)
}

/// The hypergeometric double sum shared by the last two cases: subsets of
/// size `s` split into `m` nearer points, with `m` confined to
/// `[m_lo, m_hi]`, each term weighted by the label swap against the
/// displaced `(K-m)`-th closest U point.
fn correction_sum(ctx: &RankContext, k: usize, i: usize, m_lo: usize, m_hi: usize) -> f64 {
    let v_len = ctx.v_len();
    if v_len < 2 || m_lo > m_hi {
        return 0.0;
    }
    let near_match = ctx.v_match(i - 1);
    let mut total = 0.0;
    for s in m_lo..=v_len - 2 {
        for m in m_lo..=m_hi.min(s) {
            let ratio = hypergeom_ratio(s, m, v_len, i);
            if ratio < RATIO_UNDERFLOW {
                continue;
            }
            total += ratio * (near_match - ctx.u_match(k - m));
        }
    }
    total / (k as f64 * (v_len - 1) as f64)
}

/// Exact KNN asymmetric data Shapley over a test set: per class and test
/// point, rank, seed the recursion at the farthest class member, walk
/// inward, then average per-point values across test points. With a
/// single-class partition this is the classical exact KNN data Shapley.
pub fn knn_ads(
    train: &Dataset,
    partition: &OrderedPartition,
    test: &TestSet,
    cfg: &KnnConfig,
) -> Result<ValueReport> {
    if cfg.k == 0 {
        return Err(Error::InvalidConfig("knn k must be at least 1".into()));
    }
    if partition.num_points() != train.len() {
        return Err(Error::SizeMismatch {
            expected: train.len(),
            got: partition.num_points(),
        });
    }
    if test.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    if test.dim() != train.dim() {
        return Err(Error::DimensionMismatch);
    }

    let per_test: Result<Vec<Vec<f64>>> = test
        .points()
        .par_iter()
        .map(|tp| per_test_values(train, partition, &tp.features, tp.label, cfg))
        .collect();
    let per_test = per_test?;

    // ordered compensated reduction so the averages do not depend on
    // thread scheduling and stay exact to the oracle tolerance
    let n = train.len();
    let mut sums = vec![KahanSum::default(); n];
    for vector in &per_test {
        for (acc, &x) in sums.iter_mut().zip(vector) {
            acc.add(x);
        }
    }
    let n_test = test.len() as f64;
    let mut values: Vec<f64> = sums.iter().map(|acc| acc.value() / n_test).collect();

    // the recursion assumes v(empty) = 0; shift the first class for the
    // configured empty score (its members are the only ones whose subsets
    // can be empty)
    if cfg.empty_score != 0.0 {
        let first = partition.class(0)?;
        let shift = cfg.empty_score / first.len() as f64;
        for &id in first {
            values[id] -= shift;
        }
    }

    Ok(ValueReport::new(
        Method::KnnAds,
        values,
        partition,
        None,
        ReportMeta {
            seed: 0,
            iterations: test.len() as u64,
            utility: format!(
                "knn(k={}, metric={}, empty_score={})",
                cfg.k, cfg.metric, cfg.empty_score
            ),
            workers: None,
            config_hash: None,
            tool_version: None,
        },
    ))
}

fn per_test_values(
    train: &Dataset,
    partition: &OrderedPartition,
    test_features: &[f64],
    test_label: usize,
    cfg: &KnnConfig,
) -> Result<Vec<f64>> {
    let mut out = vec![0.0; train.len()];
    for class_index in 0..partition.num_classes() {
        let ctx = build_rank_context(
            train,
            partition,
            class_index,
            test_features,
            test_label,
            cfg.metric,
        )?;
        let values = if ctx.u_len() == 0 {
            single_class_values(&ctx, cfg.k)
        } else {
            class_values(&ctx, cfg.k)?
        };
        for (pos, &id) in ctx.v_ids.iter().enumerate() {
            out[id] = values[pos];
        }
    }
    Ok(out)
}

/// First-class fast path: with no earlier classes every beta is zero and
/// each step reduces to the plain KNN Shapley recursion.
fn single_class_values(ctx: &RankContext, k: usize) -> Vec<f64> {
    let v_len = ctx.v_len();
    let mut values = vec![0.0; v_len];
    values[v_len - 1] = ctx.v_match(v_len - 1) * k.min(v_len) as f64 / (k * v_len) as f64;
    for i in (1..v_len).rev() {
        let swap = (ctx.v_match(i - 1) - ctx.v_match(i)) / k as f64;
        values[i - 1] = values[i] + swap * k.min(i) as f64 / i as f64;
    }
    values
}

fn class_values(ctx: &RankContext, k: usize) -> Result<Vec<f64>> {
    let v_len = ctx.v_len();
    let mut values = vec![0.0; v_len];
    values[v_len - 1] = knn_ads_initial(ctx, k);
    for i in (1..v_len).rev() {
        values[i - 1] = knn_ads_step(ctx, k, i, values[i])?;
    }
    Ok(values)
}

#[derive(Debug, Clone, Copy, Default)]
struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum
    }
}
