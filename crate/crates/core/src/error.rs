//! Shared error type for the valuation engine.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("id {0} missing: ids must cover 0..n-1")]
    MissingId(usize),
    #[error("id {0} appears more than once")]
    DuplicateId(usize),
    #[error("ordered partition contains an empty class")]
    EmptyClass,
    #[error("unknown id {0}")]
    UnknownId(usize),
    #[error("set must be non-empty")]
    EmptySet,
    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("sequence is not a permutation of 0..n-1")]
    InvalidPermutation,
    #[error("feature dimension mismatch")]
    DimensionMismatch,
    #[error("label {label} of id {id} is outside 0..{num_classes}")]
    LabelOutOfRange {
        id: usize,
        label: usize,
        num_classes: usize,
    },
    #[error("weight must be positive and finite, got {0}")]
    NonPositiveWeight(f64),
    #[error("test set must be non-empty")]
    EmptyTestSet,
    #[error("instance too large: {n} exceeds the exact-computation cap {cap}")]
    TooLarge { n: usize, cap: usize },
    #[error("weight system is not intra-class uniform")]
    NotIntraClassUniform,
    #[error("ids {0} and {1} belong to different classes")]
    DifferentClasses(usize, usize),
    #[error("permutation budget must be at least 1")]
    ZeroBudget,
    #[error("history too short: need {need} iterations, have {have}")]
    InsufficientHistory { need: usize, have: usize },
    #[error("index {0} out of range")]
    IndexOutOfRange(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error("removal step would leave the training set empty")]
    EmptyAfterRemoval,
    #[error("pool class must be ranked above every base class")]
    InvalidClassOrder,
    #[error("value report does not match the partition")]
    PartitionMismatch,
    #[error("baseline utility must be positive to normalize a curve")]
    NonPositiveBaseline,
}

pub type Result<T> = std::result::Result<T, Error>;
