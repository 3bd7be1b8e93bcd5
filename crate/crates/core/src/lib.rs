//! Asymmetric data Shapley valuation engine.
//!
//! Data Shapley assigns every training point its average marginal
//! contribution to a model score over orderings of the training set. The
//! asymmetric variant replaces the uniform average with a distribution
//! induced by a weight system: positive per-point weights plus an ordered
//! partition of the data into classes, where earlier classes always precede
//! later ones. This crate provides three interchangeable computation paths
//!
//! - brute-force oracles over subsets and permutations ([`oracle`]),
//! - Monte Carlo estimation over sampled ordered permutations ([`mc`]),
//! - an exact KNN-surrogate recursion ([`knn_exact`]),
//!
//! plus score functions ([`utility`]), synthetic scenario generators
//! ([`synth`]) and an experiment harness for removal/addition curves and
//! class-wise allocation summaries ([`experiment`]).

pub mod dataset;
pub mod error;
pub mod experiment;
pub mod knn_exact;
pub mod mc;
pub mod oracle;
pub mod partition;
pub mod permutation;
pub mod report;
pub mod synth;
pub mod utility;
pub mod weights;

pub use dataset::{DataPoint, Dataset, TestSet};
pub use error::{Error, Result};
pub use experiment::{
    addition_curve, allocation_summary, duplication_check, loo_values, removal_curve,
    AllocationSummary, Curve, CurvePoint, Direction, DuplicationReport,
};
pub use knn_exact::{
    build_rank_context, hypergeom_ratio, knn_ads, knn_ads_initial, knn_ads_step, step_case,
    KnnConfig, RankContext, StepCase,
};
pub use mc::{convergence_check, estimate_mc_ads, McConfig};
pub use partition::{ClassRelation, OrderedPartition};
pub use permutation::{
    is_ordered_permutation, make_rng, make_stream_rng, permutation_weight,
    sample_ordered_permutation, Permutation,
};
pub use report::{Method, ReportMeta, ValueReport};
pub use synth::{generate, GeneratorKind, Scenario, SyntheticSpec};
pub use utility::{
    centroid_utility, knn_score_single, knn_utility, CentroidUtility, KnnUtility, Metric,
    TableUtility, Utility,
};
pub use weights::WeightSystem;
