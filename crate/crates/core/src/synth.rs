//! Synthetic desk-scale scenarios: gaussian class clusters, augmented
//! copies with optional label corruption, drifting period streams, and
//! exact replications. Each generator fixes the partition semantics of its
//! scenario: augmented points form a class above the originals, periods
//! are ordered by arrival, replicas are ordered by copy index.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::dataset::{Dataset, TestSet};
use crate::error::{Error, Result};
use crate::partition::OrderedPartition;
use crate::permutation::make_stream_rng;

/// Horizontal offset of the two class centers.
const CLASS_SEPARATION: f64 = 2.0;
/// Cluster spread of original points in scenarios where `noise` means
/// something else (jitter scale).
const ORIGINAL_SPREAD: f64 = 0.5;
/// Per-period shift of the cluster centers along the second axis.
const DRIFT_STEP: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorKind {
    TwoGaussians,
    DriftStream,
    JitterAugment,
    Replicate,
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            GeneratorKind::TwoGaussians => "two-gaussians",
            GeneratorKind::DriftStream => "drift-stream",
            GeneratorKind::JitterAugment => "jitter-augment",
            GeneratorKind::Replicate => "replicate",
        };
        f.write_str(name)
    }
}

impl FromStr for GeneratorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two-gaussians" => Ok(GeneratorKind::TwoGaussians),
            "drift-stream" => Ok(GeneratorKind::DriftStream),
            "jitter-augment" => Ok(GeneratorKind::JitterAugment),
            "replicate" => Ok(GeneratorKind::Replicate),
            other => Err(Error::InvalidSpec(format!("unknown generator `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub kind: GeneratorKind,
    /// Training points per class (per period for drift streams).
    pub n_per_class: usize,
    pub dim: usize,
    /// Cluster spread, or jitter scale for `jitter-augment`.
    pub noise: f64,
    pub seed: u64,
    /// Drift streams only.
    pub periods: usize,
    /// Replication only.
    pub copies: usize,
    /// Fraction of augmented points whose label is flipped.
    pub corrupt_fraction: f64,
    /// Test points per class (per period for drift streams).
    pub test_per_class: usize,
}

impl SyntheticSpec {
    pub fn new(kind: GeneratorKind) -> Self {
        Self {
            kind,
            n_per_class: 50,
            dim: 2,
            noise: 0.5,
            seed: 0,
            periods: 3,
            copies: 1,
            corrupt_fraction: 0.0,
            test_per_class: 20,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_per_class == 0 || self.dim == 0 || self.test_per_class == 0 {
            return Err(Error::InvalidSpec(
                "counts and dim must be at least 1".into(),
            ));
        }
        if self.noise < 0.0 || !self.noise.is_finite() {
            return Err(Error::InvalidSpec("noise must be finite and >= 0".into()));
        }
        if self.kind == GeneratorKind::DriftStream && self.periods == 0 {
            return Err(Error::InvalidSpec("periods must be at least 1".into()));
        }
        if self.kind == GeneratorKind::Replicate && self.copies == 0 {
            return Err(Error::InvalidSpec("copies must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.corrupt_fraction) {
            return Err(Error::InvalidSpec(
                "corrupt_fraction must lie in [0, 1]".into(),
            ));
        }
        Ok(())
    }
}

/// A generated scenario: training data, the partition its valuation uses,
/// and a held-out test set.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub train: Dataset,
    pub partition: OrderedPartition,
    pub test: TestSet,
}

pub fn generate(spec: &SyntheticSpec) -> Result<Scenario> {
    spec.validate()?;
    match spec.kind {
        GeneratorKind::TwoGaussians => two_gaussians(spec),
        GeneratorKind::DriftStream => drift_stream(spec),
        GeneratorKind::JitterAugment => jitter_augment(spec),
        GeneratorKind::Replicate => replicate(spec),
    }
}

fn class_center(label: usize, period: usize, dim: usize) -> Vec<f64> {
    let mut center = vec![0.0; dim];
    center[0] = if label == 0 {
        -CLASS_SEPARATION
    } else {
        CLASS_SEPARATION
    };
    if dim > 1 {
        center[1] = period as f64 * DRIFT_STEP;
    }
    center
}

fn sample_cluster<R: Rng>(rng: &mut R, center: &[f64], spread: f64, count: usize) -> Vec<Vec<f64>> {
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    (0..count)
        .map(|_| {
            center
                .iter()
                .map(|&c| c + spread * normal.sample(rng))
                .collect()
        })
        .collect()
}

fn gaussian_block<R: Rng>(
    rng: &mut R,
    spec: &SyntheticSpec,
    period: usize,
    spread: f64,
    per_class: usize,
) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut features = Vec::with_capacity(2 * per_class);
    let mut labels = Vec::with_capacity(2 * per_class);
    for label in 0..2 {
        let center = class_center(label, period, spec.dim);
        features.extend(sample_cluster(rng, &center, spread, per_class));
        labels.extend(std::iter::repeat_n(label, per_class));
    }
    (features, labels)
}

fn two_gaussians(spec: &SyntheticSpec) -> Result<Scenario> {
    let mut train_rng = make_stream_rng(spec.seed, 0);
    let (features, labels) = gaussian_block(&mut train_rng, spec, 0, spec.noise, spec.n_per_class);
    let train = Dataset::from_parts(features, labels)?;
    let partition = OrderedPartition::single_class(train.len());

    let mut test_rng = make_stream_rng(spec.seed, 1);
    let (tf, tl) = gaussian_block(&mut test_rng, spec, 0, spec.noise, spec.test_per_class);
    let test = Dataset::from_parts(tf, tl)?;
    Ok(Scenario {
        train,
        partition,
        test,
    })
}

fn jitter_augment(spec: &SyntheticSpec) -> Result<Scenario> {
    let mut train_rng = make_stream_rng(spec.seed, 0);
    let (orig_features, orig_labels) =
        gaussian_block(&mut train_rng, spec, 0, ORIGINAL_SPREAD, spec.n_per_class);
    let n_orig = orig_features.len();

    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut aug_features: Vec<Vec<f64>> = orig_features
        .iter()
        .map(|f| {
            f.iter()
                .map(|&x| x + spec.noise * normal.sample(&mut train_rng))
                .collect()
        })
        .collect();
    let mut aug_labels = orig_labels.clone();

    let flip = (spec.corrupt_fraction * n_orig as f64).round() as usize;
    if flip > 0 {
        let mut order: Vec<usize> = (0..n_orig).collect();
        use rand::seq::SliceRandom;
        let mut corrupt_rng = make_stream_rng(spec.seed, 2);
        order.shuffle(&mut corrupt_rng);
        for &idx in order.iter().take(flip) {
            aug_labels[idx] = 1 - aug_labels[idx];
        }
    }

    let mut features = orig_features;
    features.append(&mut aug_features);
    let mut labels = orig_labels;
    labels.append(&mut aug_labels);
    let train = Dataset::from_parts(features, labels)?;
    let partition =
        OrderedPartition::new(vec![(0..n_orig).collect(), (n_orig..2 * n_orig).collect()])?;

    let mut test_rng = make_stream_rng(spec.seed, 1);
    let (tf, tl) = gaussian_block(&mut test_rng, spec, 0, ORIGINAL_SPREAD, spec.test_per_class);
    let test = Dataset::from_parts(tf, tl)?;
    Ok(Scenario {
        train,
        partition,
        test,
    })
}

fn drift_stream(spec: &SyntheticSpec) -> Result<Scenario> {
    let mut train_rng = make_stream_rng(spec.seed, 0);
    let mut test_rng = make_stream_rng(spec.seed, 1);
    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut classes = Vec::with_capacity(spec.periods);
    let mut test_features = Vec::new();
    let mut test_labels = Vec::new();
    for period in 0..spec.periods {
        let start = features.len();
        let (mut f, mut l) =
            gaussian_block(&mut train_rng, spec, period, spec.noise, spec.n_per_class);
        features.append(&mut f);
        labels.append(&mut l);
        classes.push((start..features.len()).collect());

        let (mut tf, mut tl) =
            gaussian_block(&mut test_rng, spec, period, spec.noise, spec.test_per_class);
        test_features.append(&mut tf);
        test_labels.append(&mut tl);
    }
    Ok(Scenario {
        train: Dataset::from_parts(features, labels)?,
        partition: OrderedPartition::new(classes)?,
        test: Dataset::from_parts(test_features, test_labels)?,
    })
}

fn replicate(spec: &SyntheticSpec) -> Result<Scenario> {
    let mut train_rng = make_stream_rng(spec.seed, 0);
    let (base_features, base_labels) =
        gaussian_block(&mut train_rng, spec, 0, spec.noise, spec.n_per_class);
    let n_base = base_features.len();

    let mut features = base_features.clone();
    let mut labels = base_labels.clone();
    let mut classes = vec![(0..n_base).collect::<Vec<_>>()];
    for copy in 1..=spec.copies {
        features.extend(base_features.iter().cloned());
        labels.extend(base_labels.iter().copied());
        classes.push((copy * n_base..(copy + 1) * n_base).collect());
    }

    let mut test_rng = make_stream_rng(spec.seed, 1);
    let (tf, tl) = gaussian_block(&mut test_rng, spec, 0, spec.noise, spec.test_per_class);
    Ok(Scenario {
        train: Dataset::from_parts(features, labels)?,
        partition: OrderedPartition::new(classes)?,
        test: Dataset::from_parts(tf, tl)?,
    })
}
