//! Labeled feature vectors with stable integer identities.

use crate::error::{Error, Result};

/// One training or test point: a feature vector plus a small class label.
#[derive(Debug, Clone, PartialEq)]
pub struct DataPoint {
    pub id: usize,
    pub features: Vec<f64>,
    pub label: usize,
}

/// A dataset of labeled points. Ids are exactly `0..n-1`, every feature
/// vector shares one dimension `d >= 1`, and labels lie in `0..num_classes`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    points: Vec<DataPoint>,
    num_classes: usize,
    dim: usize,
}

/// Test sets share the dataset shape; their id space is separate from the
/// training ids by construction (they live in a different value).
pub type TestSet = Dataset;

impl Dataset {
    pub fn new(mut points: Vec<DataPoint>, num_classes: usize) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptySet);
        }
        points.sort_by_key(|p| p.id);
        let dim = points[0].features.len();
        if dim == 0 {
            return Err(Error::DimensionMismatch);
        }
        for (expect, p) in points.iter().enumerate() {
            if p.id > expect {
                return Err(Error::MissingId(expect));
            }
            if p.id < expect {
                // after the sort a repeated id sits below its index
                return Err(Error::DuplicateId(p.id));
            }
            if p.features.len() != dim {
                return Err(Error::DimensionMismatch);
            }
            if p.label >= num_classes {
                return Err(Error::LabelOutOfRange {
                    id: p.id,
                    label: p.label,
                    num_classes,
                });
            }
        }
        Ok(Self {
            points,
            num_classes,
            dim,
        })
    }

    /// An empty dataset with a declared shape. Useful as a not-yet-filled
    /// test set; most operations reject it explicitly.
    pub fn empty(dim: usize, num_classes: usize) -> Self {
        Self {
            points: Vec::new(),
            num_classes,
            dim,
        }
    }

    /// Build from parallel feature/label vectors, assigning ids `0..n-1` and
    /// inferring `num_classes` as `max(label) + 1`.
    pub fn from_parts(features: Vec<Vec<f64>>, labels: Vec<usize>) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(Error::SizeMismatch {
                expected: features.len(),
                got: labels.len(),
            });
        }
        let num_classes = labels.iter().copied().max().map_or(0, |m| m + 1);
        let points = features
            .into_iter()
            .zip(labels)
            .enumerate()
            .map(|(id, (features, label))| DataPoint {
                id,
                features,
                label,
            })
            .collect();
        Self::new(points, num_classes)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn points(&self) -> &[DataPoint] {
        &self.points
    }

    pub fn point(&self, id: usize) -> Result<&DataPoint> {
        self.points.get(id).ok_or(Error::UnknownId(id))
    }

    pub fn features(&self, id: usize) -> &[f64] {
        &self.points[id].features
    }

    pub fn label(&self, id: usize) -> usize {
        self.points[id].label
    }
}
