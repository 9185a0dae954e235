//! Plug-in estimates of block probabilities from the fitting node pairs.
//!
//! The fitting pairs of a split `(N1, N2)` are those with at least one
//! endpoint in `N1`. For communities `k != k'` the directed count runs over
//! `i in N1_k` and `j` anywhere in community `k'`; within a community it runs
//! over unordered pairs inside `N1_k` plus pairs from `N1_k` to `N2_k`.
//! Off-diagonal estimates pool the two directed counts, which keeps the
//! estimate symmetric.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{AdjacencyMatrix, Membership, NodeSet};
use crate::models::BlockMatrix;

/// Clamp applied to every predicted probability.
pub const PROB_EPS: f64 = 1e-6;
/// Denominators below this fall back to a global rate.
pub const MIN_DENOMINATOR: f64 = 1e-12;

pub fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_EPS, 1.0 - PROB_EPS)
}

/// Directed edge counts and (weighted) pair counts per ordered community pair.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockCounts {
    k: usize,
    edges: Vec<f64>,
    pairs: Vec<f64>,
    /// Edges with at least one endpoint in `N1`.
    pub fitting_edges: f64,
    /// Unordered pairs with at least one endpoint in `N1`, weighted by
    /// `psi_i psi_j` when weights are given.
    pub fitting_pairs: f64,
    /// Unweighted count of the same pairs.
    pub fitting_pair_count: f64,
}

impl BlockCounts {
    pub fn k(&self) -> usize {
        self.k
    }

    /// Numerator for the ordered pair `(a, b)`.
    pub fn edges(&self, a: usize, b: usize) -> f64 {
        self.edges[a * self.k + b]
    }

    /// Denominator for the ordered pair `(a, b)`.
    pub fn pairs(&self, a: usize, b: usize) -> f64 {
        self.pairs[a * self.k + b]
    }

    /// Symmetric ratio: pooled over both orders off the diagonal, `None`
    /// when the denominator vanishes.
    fn ratio(&self, a: usize, b: usize) -> Option<f64> {
        let (num, den) = if a == b {
            (self.edges(a, a), self.pairs(a, a))
        } else {
            (self.edges(a, b) + self.edges(b, a), self.pairs(a, b) + self.pairs(b, a))
        };
        (den >= MIN_DENOMINATOR).then(|| num / den)
    }
}

fn check_split(a: &AdjacencyMatrix, fitting: &NodeSet, held: &NodeSet, g: &Membership) -> Result<Vec<bool>> {
    let n = a.n();
    if g.n() != n {
        return Err(Error::DimensionMismatch(format!("membership has {} nodes, graph has {n}", g.n())));
    }
    if fitting.len() + held.len() != n {
        return Err(Error::invalid("fitting and held-out sets must partition the nodes"));
    }
    let is_fit = fitting.mask(n);
    if held.ids().iter().any(|&i| i >= n || is_fit[i]) {
        return Err(Error::invalid("fitting and held-out sets overlap"));
    }
    Ok(is_fit)
}

/// Edge and pair counts for the split. With `weights`, pair counts become
/// sums of `w_i w_j` over the same pairs.
pub fn block_counts(
    a: &AdjacencyMatrix,
    fitting: &NodeSet,
    held: &NodeSet,
    g: &Membership,
    weights: Option<&[f64]>,
) -> Result<BlockCounts> {
    let is_fit = check_split(a, fitting, held, g)?;
    let n = a.n();
    let k = g.k();
    if let Some(w) = weights {
        if w.len() != n {
            return Err(Error::DimensionMismatch(format!("{} weights for {n} nodes", w.len())));
        }
    }
    let weight = |i: usize| weights.map_or(1.0, |w| w[i]);

    let mut edges = vec![0.0; k * k];
    let mut fitting_edges = 0.0;
    for &i in fitting.ids() {
        let ki = g.label(i);
        for &j in a.neighbors(i) {
            let j = j as usize;
            let kj = g.label(j);
            let first_visit = !is_fit[j] || j > i;
            if ki != kj {
                edges[ki * k + kj] += 1.0;
            } else if first_visit {
                edges[ki * k + ki] += 1.0;
            }
            if first_visit {
                fitting_edges += 1.0;
            }
        }
    }

    // per-community sums over N1 and N2: count, sum w, sum w^2
    let mut s1 = vec![0.0; k];
    let mut q1 = vec![0.0; k];
    let mut s2 = vec![0.0; k];
    let (mut tot1, mut tot2, mut sq2) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let w = weight(i);
        let l = g.label(i);
        if is_fit[i] {
            s1[l] += w;
            q1[l] += w * w;
            tot1 += w;
        } else {
            s2[l] += w;
            tot2 += w;
            sq2 += w * w;
        }
    }
    let mut pairs = vec![0.0; k * k];
    for ka in 0..k {
        for kb in 0..k {
            pairs[ka * k + kb] = if ka == kb {
                (s1[ka] * s1[ka] - q1[ka]) / 2.0 + s1[ka] * s2[ka]
            } else {
                s1[ka] * (s1[kb] + s2[kb])
            };
        }
    }
    // all pairs minus pairs inside N2
    let total = tot1 + tot2;
    let sq_total = q1.iter().sum::<f64>() + sq2;
    let fitting_pairs = (total * total - sq_total) / 2.0 - (tot2 * tot2 - sq2) / 2.0;
    let (n1c, n2c) = (fitting.len() as f64, held.len() as f64);
    let fitting_pair_count = n1c * (n1c - 1.0) / 2.0 + n1c * n2c;
    Ok(BlockCounts {
        k,
        edges,
        pairs,
        fitting_edges,
        fitting_pairs,
        fitting_pair_count,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SbmFit {
    pub g_hat: Membership,
    #[serde(rename = "B_hat")]
    pub b_hat: BlockMatrix,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DcbmFit {
    pub g_hat: Membership,
    /// Symmetric, nonnegative, not capped at 1.
    #[serde(rename = "B_prime_hat")]
    pub b_prime_hat: Vec<Vec<f64>>,
    pub psi_prime_hat: Vec<f64>,
}

fn check_k(g: &Membership, k: usize) -> Result<()> {
    if g.k() != k {
        return Err(Error::DimensionMismatch(format!("membership has k = {}, expected {k}", g.k())));
    }
    Ok(())
}

/// Block-probability plug-in estimate. Community pairs with no fitting
/// pairs fall back to the overall fitting-set edge density.
pub fn estimate_b_sbm(a: &AdjacencyMatrix, fitting: &NodeSet, held: &NodeSet, g_hat: &Membership, k: usize) -> Result<SbmFit> {
    check_k(g_hat, k)?;
    let counts = block_counts(a, fitting, held, g_hat, None)?;
    let density = if counts.fitting_pairs > 0.0 {
        counts.fitting_edges / counts.fitting_pairs
    } else {
        0.0
    };
    let rows = (0..k)
        .map(|x| {
            (0..k)
                .map(|y| {
                    counts.ratio(x, y).unwrap_or_else(|| {
                        log::debug!("empty block ({}, {}), using fitting density {density:.4}", x + 1, y + 1);
                        density
                    })
                })
                .collect()
        })
        .collect();
    Ok(SbmFit {
        g_hat: g_hat.clone(),
        b_hat: BlockMatrix::new(rows)?,
    })
}

/// Degree-corrected plug-in estimate: same edge counts as the SBM estimate,
/// with pair counts replaced by sums of `psi_i psi_j`. Vanishing
/// denominators fall back to the fitting density over the mean `psi_i psi_j`.
pub fn estimate_dcbm(
    a: &AdjacencyMatrix,
    fitting: &NodeSet,
    held: &NodeSet,
    g_hat: &Membership,
    psi_prime_hat: &[f64],
    k: usize,
) -> Result<DcbmFit> {
    check_k(g_hat, k)?;
    if let Some((i, p)) = psi_prime_hat.iter().enumerate().find(|(_, p)| p.is_nan() || **p < 0.0) {
        return Err(Error::invalid(format!("psi'[{i}] = {p} is negative")));
    }
    let counts = block_counts(a, fitting, held, g_hat, Some(psi_prime_hat))?;
    let fallback = if counts.fitting_pairs >= MIN_DENOMINATOR && counts.fitting_pair_count > 0.0 {
        let density = counts.fitting_edges / counts.fitting_pair_count;
        let mean_product = counts.fitting_pairs / counts.fitting_pair_count;
        density / mean_product
    } else {
        0.0
    };
    let b_prime_hat = (0..k)
        .map(|x| {
            (0..k)
                .map(|y| {
                    counts.ratio(x, y).unwrap_or_else(|| {
                        log::debug!("empty weighted block ({}, {}), using fallback {fallback:.4}", x + 1, y + 1);
                        fallback
                    })
                })
                .collect()
        })
        .collect();
    Ok(DcbmFit {
        g_hat: g_hat.clone(),
        b_prime_hat,
        psi_prime_hat: psi_prime_hat.to_vec(),
    })
}

/// A fitted model that can predict held-out edge probabilities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum Fit {
    Sbm(SbmFit),
    Dcbm(DcbmFit),
}

impl Fit {
    pub fn membership(&self) -> &Membership {
        match self {
            Fit::Sbm(f) => &f.g_hat,
            Fit::Dcbm(f) => &f.g_hat,
        }
    }

    /// Clamped prediction; callers guarantee `i != j`.
    pub(crate) fn prob(&self, i: usize, j: usize) -> f64 {
        let raw = match self {
            Fit::Sbm(f) => f.b_hat.get(f.g_hat.label(i), f.g_hat.label(j)),
            Fit::Dcbm(f) => {
                let psi = &f.psi_prime_hat;
                psi[i] * psi[j] * f.b_prime_hat[f.g_hat.label(i)][f.g_hat.label(j)]
            }
        };
        clamp_prob(raw)
    }

    /// Predicted edge probability for `i != j`, clamped to `[1e-6, 1 - 1e-6]`.
    pub fn predict_p(&self, i: usize, j: usize) -> Result<f64> {
        let n = self.membership().n();
        if i == j || i >= n || j >= n {
            return Err(Error::invalid(format!("no prediction for pair ({i}, {j})")));
        }
        Ok(self.prob(i, j))
    }
}

impl From<SbmFit> for Fit {
    fn from(f: SbmFit) -> Self {
        Fit::Sbm(f)
    }
}

impl From<DcbmFit> for Fit {
    fn from(f: DcbmFit) -> Self {
        Fit::Dcbm(f)
    }
}
