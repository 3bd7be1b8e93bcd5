//! Monte Carlo estimation of asymmetric data Shapley under intra-class
//! uniform weight systems.
//!
//! Permutations are sampled uniformly from the ordered permutations (one
//! shuffle per class, concatenated) and scanned in full: every point's
//! marginal contribution is the utility difference between its prefix with
//! and without it. Values are running means; uncertainty is the per-point
//! sample standard error.
//!
//! Parallelism contract: each of the `workers` logical streams owns an
//! independent RNG derived from `(seed, stream index)` and the iterations
//! assigned to it (round-robin by global iteration index). Per-worker
//! `(sum, sum of squares, count)` triples are folded in worker order, so a
//! given `(seed, workers)` pair is bit-reproducible regardless of thread
//! scheduling.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::permutation::{make_stream_rng, sample_ordered_permutation};
use crate::report::{Method, ReportMeta, ValueReport};
use crate::utility::Utility;
use crate::weights::WeightSystem;

#[derive(Debug, Clone)]
pub struct McConfig {
    /// Maximum number of permutations.
    pub budget: u64,
    /// Optional convergence threshold on the running means.
    pub tol: Option<f64>,
    /// Iterations between convergence checks.
    pub window: usize,
    pub seed: u64,
    pub workers: usize,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            budget: 5_000,
            tol: None,
            window: 100,
            seed: 0,
            workers: 1,
        }
    }
}

impl McConfig {
    fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::ZeroBudget);
        }
        if self.window == 0 {
            return Err(Error::InvalidConfig("mc window must be at least 1".into()));
        }
        if self.workers == 0 {
            return Err(Error::InvalidConfig("mc workers must be at least 1".into()));
        }
        if let Some(tol) = self.tol {
            if tol.is_nan() || tol <= 0.0 {
                return Err(Error::InvalidConfig(
                    "mc tol must be positive when set".into(),
                ));
            }
        }
        Ok(())
    }
}

/// True once the running means have settled: the largest per-point change
/// between the latest mean and the mean `window` iterations earlier is
/// below `tol`. `history` holds one running-mean vector per iteration.
pub fn convergence_check(history: &[Vec<f64>], window: usize, tol: f64) -> Result<bool> {
    if history.len() < 2 * window {
        return Err(Error::InsufficientHistory {
            need: 2 * window,
            have: history.len(),
        });
    }
    let now = &history[history.len() - 1];
    let past = &history[history.len() - 1 - window];
    let max_delta = now
        .iter()
        .zip(past)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    Ok(max_delta < tol)
}

struct WorkerState {
    rng: rand_chacha::ChaCha8Rng,
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
    count: u64,
}

/// Estimate asymmetric data Shapley values by averaging marginal
/// contributions over sampled ordered permutations.
pub fn estimate_mc_ads(
    ws: &WeightSystem,
    utility: &dyn Utility,
    cfg: &McConfig,
) -> Result<ValueReport> {
    cfg.validate()?;
    if !ws.is_intra_class_uniform() {
        return Err(Error::NotIntraClassUniform);
    }
    let partition = ws.partition();
    let n = partition.num_points();
    let empty_score = utility.eval(&[]);

    let mut workers: Vec<WorkerState> = (0..cfg.workers)
        .map(|w| WorkerState {
            rng: make_stream_rng(cfg.seed, w as u64),
            sum: vec![0.0; n],
            sum_sq: vec![0.0; n],
            count: 0,
        })
        .collect();

    // with no tolerance there is nothing to check, so run one full round
    let round_len = match cfg.tol {
        Some(_) => cfg.window as u64,
        None => cfg.budget,
    };

    let mut consumed: u64 = 0;
    let mut previous_means: Option<Vec<f64>> = None;
    let mut converged = false;
    while consumed < cfg.budget && !converged {
        let this_round = round_len.min(cfg.budget - consumed);
        let start = consumed;
        let num_workers = cfg.workers as u64;
        workers.par_iter_mut().enumerate().for_each(|(w, state)| {
            // global iterations start+1 ..= start+this_round, round-robin
            let mut t = start - (start % num_workers) + w as u64;
            if t < start {
                t += num_workers;
            }
            while t < start + this_round {
                let perm = sample_ordered_permutation(partition, &mut state.rng);
                let mut prefix: Vec<usize> = Vec::with_capacity(n);
                let mut prev = empty_score;
                for &id in perm.order() {
                    prefix.push(id);
                    let cur = utility.eval(&prefix);
                    let marginal = cur - prev;
                    state.sum[id] += marginal;
                    state.sum_sq[id] += marginal * marginal;
                    prev = cur;
                }
                state.count += 1;
                t += num_workers;
            }
        });
        consumed += this_round;

        if let Some(tol) = cfg.tol {
            let means = fold_means(&workers, n);
            if consumed >= 2 * cfg.window as u64 {
                if let Some(past) = &previous_means {
                    let max_delta = means
                        .iter()
                        .zip(past)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0f64, f64::max);
                    converged = max_delta < tol;
                }
            }
            previous_means = Some(means);
        }
    }

    let (values, stderr) = fold_stats(&workers, n);
    Ok(ValueReport::new(
        Method::McAds,
        values,
        partition,
        Some(stderr),
        ReportMeta {
            seed: cfg.seed,
            iterations: consumed,
            utility: utility.describe(),
            workers: Some(cfg.workers),
            config_hash: None,
            tool_version: None,
        },
    ))
}

fn fold_means(workers: &[WorkerState], n: usize) -> Vec<f64> {
    let mut sum = vec![0.0; n];
    let mut count = 0u64;
    for w in workers {
        for (acc, s) in sum.iter_mut().zip(&w.sum) {
            *acc += s;
        }
        count += w.count;
    }
    let t = count.max(1) as f64;
    sum.iter_mut().for_each(|s| *s /= t);
    sum
}

fn fold_stats(workers: &[WorkerState], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut sum = vec![0.0; n];
    let mut sum_sq = vec![0.0; n];
    let mut count = 0u64;
    for w in workers {
        for i in 0..n {
            sum[i] += w.sum[i];
            sum_sq[i] += w.sum_sq[i];
        }
        count += w.count;
    }
    let t = count as f64;
    let means: Vec<f64> = sum.iter().map(|s| s / t).collect();
    let stderr: Vec<f64> = sum
        .iter()
        .zip(&sum_sq)
        .map(|(&s, &ss)| {
            if count < 2 {
                0.0
            } else {
                let var = (ss - s * s / t).max(0.0) / (t - 1.0);
                (var / t).sqrt()
            }
        })
        .collect();
    (means, stderr)
}
