//! Removal/addition curves, class-wise allocation summaries, duplication
//! checks and the leave-one-out baseline.
//!
//! Curves report relative accuracy: the utility of the modified training
//! set divided by the utility of the unmodified configuration. Orderings
//! break value ties by ascending id so every curve is deterministic given
//! the values and a seed.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, TestSet};
use crate::error::{Error, Result};
use crate::oracle::{exact_ads_icuws, exact_data_shapley};
use crate::partition::OrderedPartition;
use crate::permutation::make_rng;
use crate::report::{Method, ReportMeta, ValueReport};
use crate::utility::{CentroidUtility, Utility};
use crate::weights::WeightSystem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    RemoveLow,
    RemoveHigh,
    AddLow,
    AddHigh,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub fraction: f64,
    pub relative_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub direction: Direction,
    pub seed: u64,
    pub steps: Vec<CurvePoint>,
}

impl Curve {
    pub fn final_accuracy(&self) -> f64 {
        self.steps
            .last()
            .map(|p| p.relative_accuracy)
            .unwrap_or(1.0)
    }

    /// Relative accuracy at the step closest to `fraction`.
    pub fn at_fraction(&self, fraction: f64) -> f64 {
        self.steps
            .iter()
            .min_by(|a, b| {
                let da = (a.fraction - fraction).abs();
                let db = (b.fraction - fraction).abs();
                da.partial_cmp(&db).unwrap()
            })
            .map(|p| p.relative_accuracy)
            .unwrap_or(1.0)
    }
}

/// Order the ids of one class for removal or addition. Low-first orders by
/// ascending value, high-first by descending value; ties go to the smaller
/// id; `Random` shuffles with the seed.
fn ordered_class_ids(
    values: &ValueReport,
    class: &[usize],
    direction: Direction,
    seed: u64,
) -> Vec<usize> {
    let mut ids: Vec<usize> = class.to_vec();
    match direction {
        Direction::RemoveLow | Direction::AddLow => {
            ids.sort_by(|&a, &b| {
                (values.values[a], a)
                    .partial_cmp(&(values.values[b], b))
                    .unwrap()
            });
        }
        Direction::RemoveHigh | Direction::AddHigh => {
            ids.sort_by(|&a, &b| {
                (-values.values[a], a)
                    .partial_cmp(&(-values.values[b], b))
                    .unwrap()
            });
        }
        Direction::Random => {
            let mut rng = make_rng(seed);
            ids.shuffle(&mut rng);
        }
    }
    ids
}

fn fractions(steps: usize) -> Vec<f64> {
    (0..steps).map(|j| j as f64 / (steps - 1) as f64).collect()
}

/// Progressively remove the lowest- (highest-, or randomly-) valued points
/// of `target_class` and track relative accuracy on what remains.
pub fn removal_curve(
    values: &ValueReport,
    target_class: usize,
    train: &Dataset,
    partition: &OrderedPartition,
    utility: &dyn Utility,
    steps: usize,
    direction: Direction,
    seed: u64,
) -> Result<Curve> {
    if steps < 2 {
        return Err(Error::InvalidConfig(
            "a curve needs at least 2 steps".into(),
        ));
    }
    if values.values.len() != partition.num_points() || partition.num_points() != train.len() {
        return Err(Error::PartitionMismatch);
    }
    let class = partition.class(target_class)?;
    let victims = ordered_class_ids(values, class, direction, seed);

    let all_ids: Vec<usize> = (0..train.len()).collect();
    let baseline = utility.eval(&all_ids);
    if baseline <= 0.0 {
        return Err(Error::NonPositiveBaseline);
    }

    let mut curve_steps = Vec::with_capacity(steps);
    for fraction in fractions(steps) {
        let drop = (fraction * victims.len() as f64).round() as usize;
        let dropped: std::collections::HashSet<usize> =
            victims.iter().take(drop).copied().collect();
        let remaining: Vec<usize> = all_ids
            .iter()
            .copied()
            .filter(|id| !dropped.contains(id))
            .collect();
        if remaining.is_empty() {
            return Err(Error::EmptyAfterRemoval);
        }
        let score = utility.eval(&remaining);
        curve_steps.push(CurvePoint {
            fraction,
            relative_accuracy: score / baseline,
        });
    }
    Ok(Curve {
        direction,
        seed,
        steps: curve_steps,
    })
}

/// Starting from the union of `base_classes`, add `pool_class` points in
/// value order and track relative accuracy against the base model.
pub fn addition_curve(
    values: &ValueReport,
    base_classes: &[usize],
    pool_class: usize,
    train: &Dataset,
    partition: &OrderedPartition,
    utility: &dyn Utility,
    steps: usize,
    direction: Direction,
    seed: u64,
) -> Result<Curve> {
    if steps < 2 {
        return Err(Error::InvalidConfig(
            "a curve needs at least 2 steps".into(),
        ));
    }
    if values.values.len() != partition.num_points() || partition.num_points() != train.len() {
        return Err(Error::PartitionMismatch);
    }
    if base_classes.iter().any(|&b| b >= pool_class) {
        return Err(Error::InvalidClassOrder);
    }
    let pool = partition.class(pool_class)?;
    let additions = ordered_class_ids(values, pool, direction, seed);

    let mut base: Vec<usize> = Vec::new();
    for &b in base_classes {
        base.extend(partition.class(b)?.iter().copied());
    }
    base.sort_unstable();
    let baseline = utility.eval(&base);
    if baseline <= 0.0 {
        return Err(Error::NonPositiveBaseline);
    }

    let mut curve_steps = Vec::with_capacity(steps);
    for fraction in fractions(steps) {
        let take = (fraction * additions.len() as f64).round() as usize;
        let mut subset = base.clone();
        subset.extend(additions.iter().take(take).copied());
        let score = utility.eval(&subset);
        curve_steps.push(CurvePoint {
            fraction,
            relative_accuracy: score / baseline,
        });
    }
    Ok(Curve {
        direction,
        seed,
        steps: curve_steps,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationSummary {
    pub class_sums: Vec<f64>,
    pub shares: Vec<f64>,
    pub total: f64,
}

/// Per-class value sums and normalized shares under the given partition.
pub fn allocation_summary(
    values: &ValueReport,
    partition: &OrderedPartition,
) -> Result<AllocationSummary> {
    if values.values.len() != partition.num_points() {
        return Err(Error::PartitionMismatch);
    }
    let class_sums: Vec<f64> = partition
        .classes()
        .iter()
        .map(|class| class.iter().map(|&id| values.values[id]).sum())
        .collect();
    let total: f64 = class_sums.iter().sum();
    let shares = if total > 0.0 {
        class_sums.iter().map(|s| s / total).collect()
    } else {
        vec![0.0; class_sums.len()]
    };
    Ok(AllocationSummary {
        class_sums,
        shares,
        total,
    })
}

/// What exact duplication does to the values: under plain data Shapley each
/// copy inherits its original's value and the total shrinks by the copy
/// count, while under the copy-aware partition the originals keep the whole
/// base gain and each copy class sums to the (zero) utility increment.
#[derive(Debug, Clone, PartialEq)]
pub struct DuplicationReport {
    pub copies: usize,
    /// max over originals i and copies c of |phi_i - phi_{copy c of i}|
    pub max_pair_deviation: f64,
    /// sum of union values over the original block alone
    pub original_block_sum: f64,
    pub base_sum: f64,
    /// |original_block_sum - base_sum / (copies + 1)|: with equal pair
    /// values each block carries an equal slice of the unchanged total
    pub sum_shrink_deviation: f64,
    /// class sums of the copy-aware asymmetric values
    pub ads_class_sums: Vec<f64>,
    /// max |copy-class sum| under the copy-aware partition
    pub max_copy_class_sum: f64,
}

pub fn duplication_check(
    train: &Dataset,
    test: &TestSet,
    copies: usize,
    empty_score: f64,
) -> Result<DuplicationReport> {
    let n = train.len();
    let union_n = n * (copies + 1);

    let mut features: Vec<Vec<f64>> = Vec::with_capacity(union_n);
    let mut labels = Vec::with_capacity(union_n);
    let mut classes = Vec::with_capacity(copies + 1);
    for copy in 0..=copies {
        for p in train.points() {
            features.push(p.features.clone());
            labels.push(p.label);
        }
        classes.push((copy * n..(copy + 1) * n).collect::<Vec<_>>());
    }
    let union = Dataset::from_parts(features, labels)?;
    let partition = OrderedPartition::new(classes)?;

    let union_utility = CentroidUtility::new(union.clone(), test.clone(), empty_score)?;
    let plain_union = exact_data_shapley(&union_utility, union_n)?;

    let base_utility = CentroidUtility::new(train.clone(), test.clone(), empty_score)?;
    let plain_base = exact_data_shapley(&base_utility, n)?;

    let mut max_pair_deviation = 0.0f64;
    for copy in 1..=copies {
        for i in 0..n {
            let d = (plain_union.values[i] - plain_union.values[copy * n + i]).abs();
            max_pair_deviation = max_pair_deviation.max(d);
        }
    }
    let original_block_sum: f64 = plain_union.values[..n].iter().sum();
    let base_sum: f64 = plain_base.values.iter().sum();
    let sum_shrink_deviation = (original_block_sum - base_sum / (copies + 1) as f64).abs();

    let ws = WeightSystem::intra_class_uniform(partition);
    let ads = exact_ads_icuws(&ws, &union_utility)?;
    let max_copy_class_sum = ads.class_sums[1..]
        .iter()
        .fold(0.0f64, |acc, s| acc.max(s.abs()));

    Ok(DuplicationReport {
        copies,
        max_pair_deviation,
        original_block_sum,
        base_sum,
        sum_shrink_deviation,
        ads_class_sums: ads.class_sums,
        max_copy_class_sum,
    })
}

/// Leave-one-out baseline: `v(D) - v(D \ {i})` per point.
pub fn loo_values(utility: &dyn Utility, n: usize) -> ValueReport {
    let all: Vec<usize> = (0..n).collect();
    let full = utility.eval(&all);
    let values: Vec<f64> = (0..n)
        .map(|i| {
            let without: Vec<usize> = all.iter().copied().filter(|&j| j != i).collect();
            full - utility.eval(&without)
        })
        .collect();
    ValueReport::new(
        Method::Loo,
        values,
        &OrderedPartition::single_class(n),
        None,
        ReportMeta {
            seed: 0,
            iterations: 0,
            utility: utility.describe(),
            workers: None,
            config_hash: None,
            tool_version: None,
        },
    )
}
