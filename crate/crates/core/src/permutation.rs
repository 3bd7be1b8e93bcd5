//! Permutations, ordered-permutation sampling, and permutation weights.
//!
//! Under a weight system the probability of a permutation
//! `pi = (o_1..o_n)` is zero unless class ranks are non-decreasing along
//! `pi`, and otherwise equals the product over positions of
//! `lambda_{o_k} / sum of lambda over the maximal-class members of the
//! prefix`. For intra-class uniform weights this collapses to the constant
//! `1 / prod_j |S_j|!` over ordered permutations.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::partition::OrderedPartition;
use crate::weights::WeightSystem;

/// Above this size the weight product is accumulated in log space; the
/// direct product underflows (`1/n!` alone is ~1e-19 at n=21).
const LOG_SPACE_THRESHOLD: usize = 20;

/// A bijection over `0..n-1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    order: Vec<usize>,
}

impl Permutation {
    pub fn new(order: Vec<usize>) -> Result<Self> {
        let n = order.len();
        let mut seen = vec![false; n];
        for &id in &order {
            if id >= n || seen[id] {
                return Err(Error::InvalidPermutation);
            }
            seen[id] = true;
        }
        Ok(Self { order })
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }
}

/// The project-wide seedable RNG. ChaCha streams are cheap to split: one
/// seed plus a stream index yields independent, reproducible sequences.
pub fn make_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derive the RNG for a numbered worker stream.
pub fn make_stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// True iff class ranks along `perm` are non-decreasing.
pub fn is_ordered_permutation(partition: &OrderedPartition, perm: &Permutation) -> Result<bool> {
    if perm.len() != partition.num_points() {
        return Err(Error::SizeMismatch {
            expected: partition.num_points(),
            got: perm.len(),
        });
    }
    let order = perm.order();
    for pair in order.windows(2) {
        if partition.rank_of(pair[0])? > partition.rank_of(pair[1])? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Draw uniformly from the ordered permutations of `partition`: shuffle
/// each class independently and concatenate in class order.
pub fn sample_ordered_permutation<R: Rng>(
    partition: &OrderedPartition,
    rng: &mut R,
) -> Permutation {
    let mut order = Vec::with_capacity(partition.num_points());
    for class in partition.classes() {
        let mut ids = class.clone();
        ids.shuffle(rng);
        order.extend(ids);
    }
    Permutation { order }
}

/// Probability of `perm` under the weight system: zero off the ordered
/// permutations, the max-set weight product on them.
pub fn permutation_weight(ws: &WeightSystem, perm: &Permutation) -> Result<f64> {
    if !is_ordered_permutation(ws.partition(), perm)? {
        return Ok(0.0);
    }
    let weight = if perm.len() > LOG_SPACE_THRESHOLD {
        weight_log(ws, perm)
    } else {
        weight_direct(ws, perm)
    };
    Ok(weight)
}

// Along an ordered permutation the maximal class of each prefix is the
// class of the latest element, so the denominator is a running sum that
// resets at every class boundary.
fn weight_direct(ws: &WeightSystem, perm: &Permutation) -> f64 {
    let partition = ws.partition();
    let weights = ws.weights();
    let mut acc = 1.0;
    let mut current_rank = usize::MAX;
    let mut running = 0.0;
    for &id in perm.order() {
        let rank = partition.rank_of(id).expect("validated id");
        if rank != current_rank {
            current_rank = rank;
            running = 0.0;
        }
        running += weights[id];
        acc *= weights[id] / running;
    }
    acc
}

fn weight_log(ws: &WeightSystem, perm: &Permutation) -> f64 {
    let partition = ws.partition();
    let weights = ws.weights();
    let mut log_acc = 0.0;
    let mut current_rank = usize::MAX;
    let mut running = 0.0;
    for &id in perm.order() {
        let rank = partition.rank_of(id).expect("validated id");
        if rank != current_rank {
            current_rank = rank;
            running = 0.0;
        }
        running += weights[id];
        log_acc += weights[id].ln() - running.ln();
    }
    log_acc.exp()
}
