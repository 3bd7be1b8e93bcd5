//! Weight systems: positive per-point weights paired with an ordered partition.

use crate::error::{Error, Result};
use crate::partition::OrderedPartition;

#[derive(Debug, Clone, PartialEq)]
pub struct WeightSystem {
    weights: Vec<f64>,
    partition: OrderedPartition,
}

impl WeightSystem {
    pub fn new(weights: Vec<f64>, partition: OrderedPartition) -> Result<Self> {
        if weights.len() != partition.num_points() {
            return Err(Error::SizeMismatch {
                expected: partition.num_points(),
                got: weights.len(),
            });
        }
        for &w in &weights {
            if w <= 0.0 || !w.is_finite() {
                return Err(Error::NonPositiveWeight(w));
            }
        }
        Ok(Self { weights, partition })
    }

    /// Unit weights over the given partition: always intra-class uniform.
    pub fn intra_class_uniform(partition: OrderedPartition) -> Self {
        let weights = vec![1.0; partition.num_points()];
        Self { weights, partition }
    }

    /// True iff every class shares a single weight value.
    pub fn is_intra_class_uniform(&self) -> bool {
        self.partition.classes().iter().all(|class| {
            let first = self.weights[class[0]];
            class.iter().all(|&id| self.weights[id] == first)
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn partition(&self) -> &OrderedPartition {
        &self.partition
    }

    pub fn num_points(&self) -> usize {
        self.weights.len()
    }

    /// Rescale every weight by a positive factor.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.weights.iter().map(|w| w * factor).collect(),
            self.partition.clone(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detects_intra_class_uniformity() {
        let partition = OrderedPartition::new(vec![vec![0, 1], vec![2]]).unwrap();
        let uniform = WeightSystem::new(vec![2.0, 2.0, 5.0], partition.clone()).unwrap();
        assert!(uniform.is_intra_class_uniform());

        let skewed = WeightSystem::new(vec![1.0, 2.0, 5.0], partition).unwrap();
        assert!(!skewed.is_intra_class_uniform());
    }

    #[test]
    fn rejects_non_positive_weights() {
        let partition = OrderedPartition::single_class(2);
        assert_eq!(
            WeightSystem::new(vec![1.0, 0.0], partition.clone()).unwrap_err(),
            Error::NonPositiveWeight(0.0)
        );
        assert_eq!(
            WeightSystem::new(vec![1.0, -3.0], partition).unwrap_err(),
            Error::NonPositiveWeight(-3.0)
        );
    }

    #[test]
    fn scaling_preserves_uniformity() {
        let partition = OrderedPartition::new(vec![vec![0], vec![1, 2]]).unwrap();
        let ws = WeightSystem::new(vec![1.0, 3.0, 3.0], partition).unwrap();
        let scaled = ws.scaled(7.3).unwrap();
        assert!(scaled.is_intra_class_uniform());
        assert_eq!(scaled.weights()[1], 3.0 * 7.3);
    }
}
