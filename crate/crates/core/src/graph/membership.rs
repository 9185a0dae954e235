use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Community labels for `n` nodes.
///
/// Labels are 0-based in memory (`0..k`); serialized forms use the 1-based
/// community ids `1..=k`. Not every label has to be in use: an estimated
/// membership may leave some communities empty.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "MembershipRepr", try_from = "MembershipRepr")]
pub struct Membership {
    labels: Vec<usize>,
    k: usize,
}

#[derive(Serialize, Deserialize)]
struct MembershipRepr {
    k: usize,
    labels: Vec<usize>,
}

impl From<Membership> for MembershipRepr {
    fn from(m: Membership) -> Self {
        Self {
            k: m.k,
            labels: m.labels.iter().map(|&l| l + 1).collect(),
        }
    }
}

impl TryFrom<MembershipRepr> for Membership {
    type Error = Error;

    fn try_from(r: MembershipRepr) -> Result<Self> {
        if r.labels.contains(&0) {
            return Err(Error::invalid("community ids are 1-based"));
        }
        Membership::new(r.labels.into_iter().map(|l| l - 1).collect(), r.k)
    }
}

impl Membership {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("membership needs at least one community"));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
            return Err(Error::invalid(format!("label {bad} out of range for k = {k}")));
        }
        Ok(Self { labels, k })
    }

    /// Contiguous blocks: the first `sizes[0]` nodes get label 0, and so on.
    pub fn from_sizes(sizes: &[usize]) -> Result<Self> {
        let labels = sizes
            .iter()
            .enumerate()
            .flat_map(|(c, &s)| std::iter::repeat_n(c, s))
            .collect();
        Self::new(labels, sizes.len())
    }

    pub fn single(n: usize) -> Self {
        Self {
            labels: vec![0; n],
            k: 1,
        }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    /// Apply a label permutation: node label `l` becomes `perm[l]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.k {
            return Err(Error::DimensionMismatch("permutation length differs from k".into()));
        }
        Self::new(self.labels.iter().map(|&l| perm[l]).collect(), self.k)
    }
}

/// Minimum over label permutations of the number of nodes whose labels
/// disagree.
///
/// Solved as a maximum-agreement assignment on the confusion matrix, padded
/// to square when the two label counts differ.
pub fn hamming_up_to_permutation(a: &Membership, b: &Membership) -> Result<usize> {
    if a.n() != b.n() {
        return Err(Error::DimensionMismatch(format!(
            "memberships have {} and {} nodes",
            a.n(),
            b.n()
        )));
    }
    let m = a.k().max(b.k());
    let mut confusion = vec![vec![0i64; m]; m];
    for (&x, &y) in a.labels().iter().zip(b.labels()) {
        confusion[x][y] += 1;
    }
    let assignment = max_agreement_assignment(&confusion);
    let agree: i64 = assignment
        .iter()
        .enumerate()
        .map(|(r, &c)| confusion[r][c])
        .sum();
    Ok(a.n() - agree as usize)
}

/// Row-to-column assignment maximizing the total weight of a square matrix
/// (Hungarian method with potentials, `O(m^3)`).
pub fn max_agreement_assignment(weights: &[Vec<i64>]) -> Vec<usize> {
    let m = weights.len();
    if m == 0 {
        return Vec::new();
    }
    // minimize negated weights; 1-based arrays with a virtual column 0
    let cost = |r: usize, c: usize| -weights[r - 1][c - 1];
    let mut u = vec![0i64; m + 1];
    let mut v = vec![0i64; m + 1];
    let mut row_of = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for r in 1..=m {
        row_of[0] = r;
        let mut col = 0;
        let mut minv = vec![i64::MAX; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[col] = true;
            let r0 = row_of[col];
            let mut delta = i64::MAX;
            let mut next = 0;
            for c in 1..=m {
                if used[c] {
                    continue;
                }
                let cur = cost(r0, c) - u[r0] - v[c];
                if cur < minv[c] {
                    minv[c] = cur;
                    way[c] = col;
                }
                if minv[c] < delta {
                    delta = minv[c];
                    next = c;
                }
            }
            for c in 0..=m {
                if used[c] {
                    u[row_of[c]] += delta;
                    v[c] -= delta;
                } else {
                    minv[c] -= delta;
                }
            }
            col = next;
            if row_of[col] == 0 {
                break;
            }
        }
        loop {
            let prev = way[col];
            row_of[col] = row_of[prev];
            col = prev;
            if col == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; m];
    for c in 1..=m {
        assignment[row_of[c] - 1] = c - 1;
    }
    assignment
}
