use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::NodeSet;
use crate::error::{Error, Result};
use crate::seed;

/// `V` disjoint node subsets covering `0..n`, sizes differing by at most one.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPartition {
    n: usize,
    folds: Vec<NodeSet>,
}

impl FoldPartition {
    pub fn folds(&self) -> &[NodeSet] {
        &self.folds
    }

    pub fn fold(&self, v: usize) -> &NodeSet {
        &self.folds[v]
    }

    pub fn len(&self) -> usize {
        self.folds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.folds.is_empty()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Build from explicit folds, checking disjointness and coverage.
    pub fn from_folds(n: usize, folds: Vec<NodeSet>) -> Result<Self> {
        let mut seen = vec![false; n];
        for f in &folds {
            for &i in f.ids() {
                if i >= n || std::mem::replace(&mut seen[i], true) {
                    return Err(Error::invalid(format!("node {i} repeated or out of range")));
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::invalid("folds do not cover every node"));
        }
        Ok(Self { n, folds })
    }
}

/// Uniformly random balanced partition of `0..n` into `v` folds; the first
/// `n % v` folds receive one extra node.
pub fn partition_nodes(n: usize, v: usize, seed: u64) -> Result<FoldPartition> {
    if v < 2 {
        return Err(Error::invalid(format!("fold count must be at least 2, got {v}")));
    }
    if v > n {
        return Err(Error::invalid(format!("{v} folds requested for {n} nodes")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed::rng(seed));
    let (base, extra) = (n / v, n % v);
    let mut folds = Vec::with_capacity(v);
    let mut start = 0;
    for f in 0..v {
        let size = base + usize::from(f < extra);
        let mut ids = order[start..start + size].to_vec();
        ids.sort_unstable();
        folds.push(NodeSet::from_sorted(ids));
        start += size;
    }
    Ok(FoldPartition { n, folds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sizes(p: &FoldPartition) -> Vec<usize> {
        p.folds().iter().map(NodeSet::len).collect()
    }

    #[test]
    fn exact_division() {
        assert_eq!(sizes(&partition_nodes(9, 3, 1).unwrap()), vec![3, 3, 3]);
    }

    #[test]
    fn remainder_goes_to_first_folds() {
        assert_eq!(sizes(&partition_nodes(10, 3, 1).unwrap()), vec![4, 3, 3]);
    }

    #[test]
    fn deterministic_given_seed() {
        let a = partition_nodes(1000, 3, 42).unwrap();
        assert_eq!(a, partition_nodes(1000, 3, 42).unwrap());
        assert_ne!(a, partition_nodes(1000, 3, 43).unwrap());
    }

    #[test]
    fn invalid_fold_counts() {
        assert!(partition_nodes(2, 3, 0).is_err());
        assert!(partition_nodes(5, 1, 0).is_err());
    }

    proptest! {
        #[test]
        fn partitions_are_disjoint_exhaustive_balanced(n in 2usize..300, v in 2usize..8, seed: u64) {
            prop_assume!(v <= n);
            let p = partition_nodes(n, v, seed).unwrap();
            prop_assert_eq!(p.len(), v);
            let mut all: Vec<usize> = p.folds().iter().flat_map(|f| f.ids().iter().copied()).collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            let s = sizes(&p);
            prop_assert!(s.iter().max().unwrap() - s.iter().min().unwrap() <= 1);
        }
    }
}
