//! Spectral clustering on rectangular adjacency slices.
//!
//! Plain spectral clustering runs k-means on the rows of the top right
//! singular vectors. The spherical variant normalizes those rows to unit
//! length first and clusters with k-median; the discarded row norms are the
//! degree estimates used by the DCBM estimator.

mod kmeans;
mod kmedian;
mod svd;

use nalgebra::DMatrix;

pub use kmeans::{kmeans, kmeans_with, ClusterConfig, ClusterResult};
pub use kmedian::{kmedian_spherical, kmedian_with};
pub use svd::{top_k_right_singular, top_k_right_singular_with, Rectangle, SingularBasis, SvdMethod, DENSE_LIMIT};

use crate::error::{Error, Result};
use crate::graph::{Membership, NodeSet};

/// Rows with norm below this are treated as zero rows.
pub const ZERO_ROW_TOL: f64 = 1e-12;

/// Unit-normalized singular-vector rows.
#[derive(Clone, Debug)]
pub struct SphericalEmbedding {
    /// `n x k`; zero rows are left as zeros.
    pub rows: DMatrix<f64>,
    pub row_norms: Vec<f64>,
    pub zero_rows: NodeSet,
}

pub fn spherical_embed(basis: &SingularBasis) -> SphericalEmbedding {
    let mut rows = basis.vectors.clone();
    let mut row_norms = Vec::with_capacity(rows.nrows());
    let mut zero = Vec::new();
    for (i, mut row) in rows.row_iter_mut().enumerate() {
        let norm = row.norm();
        row_norms.push(norm);
        if norm < ZERO_ROW_TOL {
            row.fill(0.0);
            zero.push(i);
        } else {
            row /= norm;
        }
    }
    SphericalEmbedding {
        rows,
        row_norms,
        zero_rows: NodeSet::from_sorted(zero),
    }
}

/// k-means on the singular-vector rows; labels every row of the basis.
pub fn cluster_basis(basis: &SingularBasis, seed: u64, cfg: &ClusterConfig) -> Result<Membership> {
    let k = basis.k();
    if k == 1 {
        return Ok(Membership::single(basis.n()));
    }
    Ok(kmeans_with(&basis.vectors, k, seed, cfg)?.labels)
}

/// Spherical k-median on the normalized rows. Zero rows join the largest
/// cluster. Returns the labels and the row norms.
pub fn spherical_cluster_basis(basis: &SingularBasis, seed: u64, cfg: &ClusterConfig) -> Result<(Membership, Vec<f64>)> {
    let k = basis.k();
    let n = basis.n();
    let embed = spherical_embed(basis);
    if k == 1 {
        return Ok((Membership::single(n), embed.row_norms));
    }
    let keep = embed.zero_rows.complement(n);
    if keep.len() < k {
        return Err(Error::invalid(format!(
            "only {} nonzero singular-vector rows for {k} communities",
            keep.len()
        )));
    }
    let sub = embed.rows.select_rows(keep.ids());
    let fit = kmedian_with(&sub, k, seed, cfg)?;
    let mut labels = vec![usize::MAX; n];
    for (&i, &l) in keep.ids().iter().zip(fit.labels.labels()) {
        labels[i] = l;
    }
    if !embed.zero_rows.is_empty() {
        let sizes = fit.labels.sizes();
        let largest = (0..k).fold(0, |best, c| if sizes[c] > sizes[best] { c } else { best });
        log::debug!("{} zero rows assigned to community {}", embed.zero_rows.len(), largest + 1);
        for &i in embed.zero_rows.ids() {
            labels[i] = largest;
        }
    }
    Ok((Membership::new(labels, k)?, embed.row_norms))
}

/// Labels for all `n` columns from the top-k right singular vectors of an
/// `n1 x n` rectangle.
pub fn spectral_cluster_rect<M: Rectangle + ?Sized>(rect: &M, k: usize, seed: u64) -> Result<Membership> {
    if k == 0 {
        return Err(Error::invalid("k must be positive"));
    }
    let basis = top_k_right_singular(rect, k)?;
    cluster_basis(&basis, seed, &ClusterConfig::default())
}

/// Spherical spectral clustering; also returns the estimated
/// community-normalized activeness (row norms of the singular vectors).
pub fn spherical_spectral_cluster_rect<M: Rectangle + ?Sized>(rect: &M, k: usize, seed: u64) -> Result<(Membership, Vec<f64>)> {
    if k == 0 {
        return Err(Error::invalid("k must be positive"));
    }
    let basis = top_k_right_singular(rect, k)?;
    spherical_cluster_basis(&basis, seed, &ClusterConfig::default())
}
