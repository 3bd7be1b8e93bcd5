//! Brute-force exact valuation for small instances. These enumerations are
//! the ground truth the estimators and the KNN recursion are checked
//! against, so they stay deliberately simple: hard size caps, one memoized
//! utility call per subset, no shortcuts.

use itertools::Itertools;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::partition::OrderedPartition;
use crate::permutation::{permutation_weight, Permutation};
use crate::report::{Method, ReportMeta, ValueReport};
use crate::utility::Utility;
use crate::weights::WeightSystem;

/// Cap for `2^n` subset enumeration.
pub const MAX_SUBSET_N: usize = 20;
/// Cap for `n!` permutation enumeration.
pub const MAX_PERM_N: usize = 9;

/// Exact binomial coefficient as f64; exact for the sizes the caps allow.
fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

/// Utility scores for every subset of `ids`, indexed by local bitmask.
/// `extra` is unioned into every evaluated subset.
fn subset_scores(utility: &dyn Utility, ids: &[usize], extra: &[usize]) -> Vec<f64> {
    let masks = 1usize << ids.len();
    (0..masks)
        .into_par_iter()
        .map(|mask| {
            let mut subset: Vec<usize> = extra.to_vec();
            subset.extend(
                ids.iter()
                    .enumerate()
                    .filter(|(bit, _)| mask >> bit & 1 == 1)
                    .map(|(_, &id)| id),
            );
            utility.eval(&subset)
        })
        .collect()
}

fn meta_for(utility: &dyn Utility) -> ReportMeta {
    ReportMeta {
        seed: 0,
        iterations: 0,
        utility: utility.describe(),
        workers: None,
        config_hash: None,
        tool_version: None,
    }
}

/// Plain data Shapley by subset enumeration: the average marginal
/// contribution of each point over all subset sizes, each size weighted by
/// `1 / (n * C(n-1, |S|))`.
pub fn exact_data_shapley(utility: &dyn Utility, n: usize) -> Result<ValueReport> {
    if n > MAX_SUBSET_N {
        return Err(Error::TooLarge {
            n,
            cap: MAX_SUBSET_N,
        });
    }
    if n == 0 {
        return Err(Error::EmptySet);
    }
    let ids: Vec<usize> = (0..n).collect();
    let scores = subset_scores(utility, &ids, &[]);
    let size_weight: Vec<f64> = (0..n)
        .map(|s| 1.0 / (n as f64 * binomial(n - 1, s)))
        .collect();

    let mut values = vec![0.0; n];
    for mask in 0..(1usize << n) - 1 {
        let w = size_weight[mask.count_ones() as usize];
        for i in 0..n {
            if mask >> i & 1 == 0 {
                values[i] += w * (scores[mask | 1 << i] - scores[mask]);
            }
        }
    }
    Ok(ValueReport::new(
        Method::OracleDs,
        values,
        &OrderedPartition::single_class(n),
        None,
        meta_for(utility),
    ))
}

/// Asymmetric data Shapley under a general weight system, by full
/// permutation enumeration: each permutation contributes its marginal
/// vector weighted by `permutation_weight`.
pub fn exact_ads_general(ws: &WeightSystem, utility: &dyn Utility) -> Result<ValueReport> {
    let n = ws.num_points();
    if n > MAX_PERM_N {
        return Err(Error::TooLarge { n, cap: MAX_PERM_N });
    }
    let ids: Vec<usize> = (0..n).collect();
    let scores = subset_scores(utility, &ids, &[]);

    let mut values = vec![0.0; n];
    for order in (0..n).permutations(n) {
        let perm = Permutation::new(order)?;
        let p = permutation_weight(ws, &perm)?;
        if p == 0.0 {
            continue;
        }
        let mut mask = 0usize;
        let mut prev = scores[0];
        for &id in perm.order() {
            mask |= 1 << id;
            let cur = scores[mask];
            values[id] += p * (cur - prev);
            prev = cur;
        }
    }
    Ok(ValueReport::new(
        Method::OracleAdsGeneral,
        values,
        ws.partition(),
        None,
        meta_for(utility),
    ))
}

/// Asymmetric data Shapley under an intra-class uniform weight system, by
/// the per-class subset sum: for a point of class k the marginal is taken
/// over subsets of its own class with all earlier classes always included.
pub fn exact_ads_icuws(ws: &WeightSystem, utility: &dyn Utility) -> Result<ValueReport> {
    if !ws.is_intra_class_uniform() {
        return Err(Error::NotIntraClassUniform);
    }
    let partition = ws.partition();
    let n = partition.num_points();
    let mut values = vec![0.0; n];

    for (k, class) in partition.classes().iter().enumerate() {
        let c = class.len();
        if c > MAX_SUBSET_N {
            return Err(Error::TooLarge {
                n: c,
                cap: MAX_SUBSET_N,
            });
        }
        let prefix = partition.prefix_ids(k);
        let scores = subset_scores(utility, class, &prefix);
        let size_weight: Vec<f64> = (0..c)
            .map(|s| 1.0 / (c as f64 * binomial(c - 1, s)))
            .collect();
        for mask in 0..(1usize << c) - 1 {
            let w = size_weight[mask.count_ones() as usize];
            for (bit, &id) in class.iter().enumerate() {
                if mask >> bit & 1 == 0 {
                    values[id] += w * (scores[mask | 1 << bit] - scores[mask]);
                }
            }
        }
    }
    Ok(ValueReport::new(
        Method::OracleAdsIcuws,
        values,
        partition,
        None,
        meta_for(utility),
    ))
}

/// The difference `phi_i - phi_j` for two same-class points under an
/// intra-class uniform weight system, via the pairwise subset sum over
/// their class with earlier classes always included.
pub fn exact_value_difference(
    ws: &WeightSystem,
    utility: &dyn Utility,
    i: usize,
    j: usize,
) -> Result<f64> {
    if !ws.is_intra_class_uniform() {
        return Err(Error::NotIntraClassUniform);
    }
    if i == j {
        return Ok(0.0);
    }
    let partition = ws.partition();
    let k = partition.rank_of(i)?;
    if k != partition.rank_of(j)? {
        return Err(Error::DifferentClasses(i, j));
    }
    let class = partition.class(k)?;
    let c = class.len();
    if c > MAX_SUBSET_N {
        return Err(Error::TooLarge {
            n: c,
            cap: MAX_SUBSET_N,
        });
    }
    let rest: Vec<usize> = class
        .iter()
        .copied()
        .filter(|&id| id != i && id != j)
        .collect();
    let prefix = partition.prefix_ids(k);

    let mut total = 0.0;
    for mask in 0..1usize << rest.len() {
        let mut with_i: Vec<usize> = prefix.clone();
        with_i.extend(
            rest.iter()
                .enumerate()
                .filter(|(bit, _)| mask >> bit & 1 == 1)
                .map(|(_, &id)| id),
        );
        let mut with_j = with_i.clone();
        with_i.push(i);
        with_j.push(j);
        let s = mask.count_ones() as usize;
        total += (utility.eval(&with_i) - utility.eval(&with_j)) / binomial(c - 2, s);
    }
    Ok(total / (c - 1) as f64)
}
