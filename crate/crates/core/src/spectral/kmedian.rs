//! k-median clustering with Weiszfeld geometric-median center updates.

use nalgebra::DMatrix;

use super::kmeans::{cluster_with, sq_dist, ClusterConfig, ClusterResult, Criterion, Points};
use crate::error::Result;

const WEISZFELD_TOL: f64 = 1e-8;
const WEISZFELD_MAX_ITER: usize = 500;
/// Distance under which an iterate is treated as sitting on a data point.
const COINCIDE: f64 = 1e-12;

struct Euclidean;

impl Criterion for Euclidean {
    fn cost(&self, point: &[f64], center: &[f64]) -> f64 {
        sq_dist(point, center).sqrt()
    }

    fn update_center(&self, points: &Points, members: &[usize], center: &mut [f64]) {
        weiszfeld(points, members, center);
    }
}

/// Geometric median of `members`, iterated in place from the current value
/// of `center`. Each step does not increase the sum of distances, including
/// the modified step used when the iterate lands on a data point.
pub(crate) fn weiszfeld(points: &Points, members: &[usize], center: &mut [f64]) {
    let dim = points.dim();
    let mut weighted = vec![0.0; dim];
    let mut pull = vec![0.0; dim];
    for _ in 0..WEISZFELD_MAX_ITER {
        weighted.fill(0.0);
        pull.fill(0.0);
        let mut inv_sum = 0.0;
        let mut coincident = 0usize;
        for &i in members {
            let p = points.row(i);
            let d = sq_dist(p, center).sqrt();
            if d < COINCIDE {
                coincident += 1;
                continue;
            }
            inv_sum += 1.0 / d;
            for t in 0..dim {
                weighted[t] += p[t] / d;
                pull[t] += (p[t] - center[t]) / d;
            }
        }
        if inv_sum == 0.0 {
            return;
        }
        let target: Vec<f64> = weighted.iter().map(|w| w / inv_sum).collect();
        let next: Vec<f64> = if coincident > 0 {
            // Vardi-Zhang: stay put when the data point is itself optimal
            let r = pull.iter().map(|x| x * x).sum::<f64>().sqrt();
            let eta = coincident as f64;
            if r <= eta {
                return;
            }
            let beta = eta / r;
            target.iter().zip(center.iter()).map(|(t, c)| (1.0 - beta) * t + beta * c).collect()
        } else {
            target
        };
        let step = sq_dist(&next, center).sqrt();
        center.copy_from_slice(&next);
        if step < WEISZFELD_TOL {
            return;
        }
    }
}

/// k-median clustering: minimizes the sum of Euclidean (not squared)
/// distances. Seeded by D-weighted sampling, best of several restarts.
pub fn kmedian_spherical(rows: &DMatrix<f64>, k: usize, seed: u64) -> Result<ClusterResult> {
    kmedian_with(rows, k, seed, &ClusterConfig::default())
}

pub fn kmedian_with(rows: &DMatrix<f64>, k: usize, seed: u64, cfg: &ClusterConfig) -> Result<ClusterResult> {
    cluster_with(rows, k, seed, cfg, &Euclidean)
}
