//! Ordered partitions: disjoint ordered classes `S_1..S_m` covering a dataset.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// How two ids relate under an ordered partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassRelation {
    EqualClass,
    Less,
    Greater,
}

/// An ordered partition of the ids `0..n-1` into non-empty classes.
/// Ids inside each class are kept sorted so every derived ordering is
/// deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderedPartition {
    classes: Vec<Vec<usize>>,
    rank_of: Vec<usize>,
}

impl OrderedPartition {
    pub fn new(classes: Vec<Vec<usize>>) -> Result<Self> {
        if classes.is_empty() {
            return Err(Error::EmptyClass);
        }
        let n: usize = classes.iter().map(|c| c.len()).sum();
        let mut rank_of = vec![usize::MAX; n];
        for (rank, class) in classes.iter().enumerate() {
            if class.is_empty() {
                return Err(Error::EmptyClass);
            }
            for &id in class {
                if id < n {
                    if rank_of[id] != usize::MAX {
                        return Err(Error::DuplicateId(id));
                    }
                    rank_of[id] = rank;
                }
                // ids beyond n-1 surface as a coverage gap below
            }
        }
        if let Some(missing) = rank_of.iter().position(|&r| r == usize::MAX) {
            return Err(Error::MissingId(missing));
        }
        let mut classes = classes;
        for class in &mut classes {
            class.sort_unstable();
        }
        Ok(Self { classes, rank_of })
    }

    /// The single-class partition, under which ordering constraints vanish.
    pub fn single_class(n: usize) -> Self {
        Self::new(vec![(0..n).collect()]).expect("non-empty single class")
    }

    /// Build from per-id class ranks. Ranks may be arbitrary integers; they
    /// are compacted to contiguous classes preserving their order.
    pub fn from_assignments(assignments: &HashMap<usize, i64>) -> Result<Self> {
        let n = assignments.len();
        if n == 0 {
            return Err(Error::EmptyClass);
        }
        let mut ranks: Vec<i64> = Vec::with_capacity(n);
        for id in 0..n {
            match assignments.get(&id) {
                Some(&r) => ranks.push(r),
                None => return Err(Error::MissingId(id)),
            }
        }
        let mut distinct: Vec<i64> = ranks.clone();
        distinct.sort_unstable();
        distinct.dedup();
        let index: HashMap<i64, usize> =
            distinct.iter().enumerate().map(|(i, &r)| (r, i)).collect();
        let mut classes = vec![Vec::new(); distinct.len()];
        for (id, r) in ranks.iter().enumerate() {
            classes[index[r]].push(id);
        }
        Self::new(classes)
    }

    pub fn num_points(&self) -> usize {
        self.rank_of.len()
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn classes(&self) -> &[Vec<usize>] {
        &self.classes
    }

    pub fn class(&self, k: usize) -> Result<&[usize]> {
        self.classes
            .get(k)
            .map(|c| c.as_slice())
            .ok_or(Error::IndexOutOfRange(k))
    }

    pub fn rank_of(&self, id: usize) -> Result<usize> {
        self.rank_of.get(id).copied().ok_or(Error::UnknownId(id))
    }

    /// All ids in classes strictly below `k`, sorted ascending.
    pub fn prefix_ids(&self, k: usize) -> Vec<usize> {
        let mut ids: Vec<usize> = self.classes[..k].iter().flatten().copied().collect();
        ids.sort_unstable();
        ids
    }

    /// Compare two ids by class rank.
    pub fn compare(&self, i: usize, j: usize) -> Result<ClassRelation> {
        let ri = self.rank_of(i)?;
        let rj = self.rank_of(j)?;
        Ok(match ri.cmp(&rj) {
            std::cmp::Ordering::Equal => ClassRelation::EqualClass,
            std::cmp::Ordering::Less => ClassRelation::Less,
            std::cmp::Ordering::Greater => ClassRelation::Greater,
        })
    }

    /// Members of `t` belonging to the highest-ranked class intersecting `t`.
    pub fn max_set(&self, t: &[usize]) -> Result<Vec<usize>> {
        if t.is_empty() {
            return Err(Error::EmptySet);
        }
        let mut top = 0;
        for &id in t {
            top = top.max(self.rank_of(id)?);
        }
        let mut out: Vec<usize> = t
            .iter()
            .copied()
            .filter(|&id| self.rank_of[id] == top)
            .collect();
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }
}
