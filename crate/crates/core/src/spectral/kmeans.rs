//! Lloyd-style alternating clustering shared by k-means and k-median.

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::graph::Membership;
use crate::seed;

/// Row-major point cloud.
#[derive(Clone, Debug)]
pub(crate) struct Points {
    data: Vec<f64>,
    dim: usize,
}

impl Points {
    pub(crate) fn from_rows(m: &DMatrix<f64>) -> Self {
        let (n, dim) = m.shape();
        let mut data = Vec::with_capacity(n * dim);
        for i in 0..n {
            data.extend(m.row(i).iter());
        }
        Self { data, dim }
    }

    pub(crate) fn len(&self) -> usize {
        self.data.len().checked_div(self.dim).unwrap_or(0)
    }

    pub(crate) fn dim(&self) -> usize {
        self.dim
    }

    pub(crate) fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Per-point cost and center update rule.
pub(crate) trait Criterion: Sync {
    fn cost(&self, point: &[f64], center: &[f64]) -> f64;
    /// Move `center` to (an approximation of) the cost minimizer over `members`.
    fn update_center(&self, points: &Points, members: &[usize], center: &mut [f64]);
}

pub(crate) struct SquaredEuclidean;

impl Criterion for SquaredEuclidean {
    fn cost(&self, point: &[f64], center: &[f64]) -> f64 {
        sq_dist(point, center)
    }

    fn update_center(&self, points: &Points, members: &[usize], center: &mut [f64]) {
        center.fill(0.0);
        for &i in members {
            for (c, x) in center.iter_mut().zip(points.row(i)) {
                *c += x;
            }
        }
        let m = members.len() as f64;
        center.iter_mut().for_each(|c| *c /= m);
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ClusterConfig {
    pub restarts: usize,
    pub max_iter: usize,
    pub execution: Execution,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            restarts: 10,
            max_iter: 100,
            execution: Execution::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ClusterResult {
    pub labels: Membership,
    /// `k x dim`, one center per row.
    pub centers: DMatrix<f64>,
    pub objective: f64,
    /// Objective after each assignment step of the winning restart.
    pub trace: Vec<f64>,
    /// Number of empty-cluster reseeds in the winning restart.
    pub empty_repairs: usize,
}

struct Run {
    labels: Vec<usize>,
    centers: Vec<f64>,
    objective: f64,
    trace: Vec<f64>,
    repairs: usize,
}

/// Seeding by sampling each new center with probability proportional to its
/// cost to the nearest existing center (D^2 for k-means, D for k-median).
fn seed_centers<C: Criterion, R: Rng>(points: &Points, k: usize, crit: &C, rng: &mut R) -> Vec<f64> {
    let n = points.len();
    let dim = points.dim();
    let mut centers = Vec::with_capacity(k * dim);
    let first = rng.random_range(0..n);
    centers.extend_from_slice(points.row(first));
    let mut nearest: Vec<f64> = (0..n).map(|i| crit.cost(points.row(i), points.row(first))).collect();
    for _ in 1..k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &w) in nearest.iter().enumerate() {
                if target < w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        let c = points.row(pick).to_vec();
        for (i, d) in nearest.iter_mut().enumerate() {
            *d = d.min(crit.cost(points.row(i), &c));
        }
        centers.extend_from_slice(&c);
    }
    centers
}

/// Nearest center per point (lowest index on ties) and the total cost.
fn assign<C: Criterion>(points: &Points, centers: &[f64], k: usize, crit: &C, labels: &mut [usize]) -> f64 {
    let dim = points.dim();
    let mut total = 0.0;
    for (i, label) in labels.iter_mut().enumerate() {
        let p = points.row(i);
        let mut best = (0, f64::INFINITY);
        for c in 0..k {
            let d = crit.cost(p, &centers[c * dim..(c + 1) * dim]);
            if d < best.1 {
                best = (c, d);
            }
        }
        *label = best.0;
        total += best.1;
    }
    total
}

/// Reseed each empty cluster at the point farthest from its current center.
fn repair_empty<C: Criterion>(points: &Points, centers: &mut [f64], k: usize, crit: &C, labels: &mut [usize]) -> (usize, f64) {
    let dim = points.dim();
    let mut repairs = 0;
    let mut objective = f64::NAN;
    for c in 0..k {
        if labels.contains(&c) {
            continue;
        }
        let far = (0..points.len())
            .map(|i| (i, crit.cost(points.row(i), &centers[labels[i] * dim..(labels[i] + 1) * dim])))
            .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best })
            .0;
        centers[c * dim..(c + 1) * dim].copy_from_slice(points.row(far));
        objective = assign(points, centers, k, crit, labels);
        repairs += 1;
    }
    (repairs, objective)
}

fn single_run<C: Criterion>(points: &Points, k: usize, crit: &C, seed: u64, max_iter: usize) -> Run {
    let mut rng = seed::rng(seed);
    let dim = points.dim();
    let mut centers = seed_centers(points, k, crit, &mut rng);
    let mut labels = vec![0usize; points.len()];
    let mut prev: Option<Vec<usize>> = None;
    let mut trace = Vec::new();
    let mut repairs = 0;
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    let max_iter = max_iter.max(1);
    for iter in 0..max_iter {
        let mut objective = assign(points, &centers, k, crit, &mut labels);
        let (r, repaired) = repair_empty(points, &mut centers, k, crit, &mut labels);
        if r > 0 {
            log::debug!("reseeded {r} empty cluster(s)");
            repairs += r;
            objective = repaired;
        }
        trace.push(objective);
        if prev.as_deref() == Some(&labels[..]) || iter + 1 == max_iter {
            break;
        }
        members.iter_mut().for_each(Vec::clear);
        for (i, &l) in labels.iter().enumerate() {
            members[l].push(i);
        }
        for (c, m) in members.iter().enumerate() {
            if !m.is_empty() {
                crit.update_center(points, m, &mut centers[c * dim..(c + 1) * dim]);
            }
        }
        prev = Some(labels.clone());
    }
    Run {
        labels,
        centers,
        objective: *trace.last().expect("at least one iteration"),
        trace,
        repairs,
    }
}

pub(crate) fn cluster_with<C: Criterion>(
    rows: &DMatrix<f64>,
    k: usize,
    seed: u64,
    cfg: &ClusterConfig,
    crit: &C,
) -> Result<ClusterResult> {
    let n = rows.nrows();
    if k == 0 || n < k {
        return Err(Error::invalid(format!("cannot form {k} clusters from {n} points")));
    }
    let points = Points::from_rows(rows);
    let restarts = cfg.restarts.max(1);
    let runs = cfg.execution.map(restarts, |r| {
        single_run(&points, k, crit, seed::derive(seed, &[seed::tag::RESTART, r as u64]), cfg.max_iter)
    });
    let best = runs
        .into_iter()
        .reduce(|best, run| if run.objective < best.objective { run } else { best })
        .expect("at least one restart");
    Ok(ClusterResult {
        labels: Membership::new(best.labels, k)?,
        centers: DMatrix::from_row_slice(k, points.dim(), &best.centers),
        objective: best.objective,
        trace: best.trace,
        empty_repairs: best.repairs,
    })
}

/// k-means++ seeding followed by Lloyd iterations, best of several restarts.
/// The objective is the sum of squared distances to assigned centers.
pub fn kmeans(rows: &DMatrix<f64>, k: usize, seed: u64) -> Result<ClusterResult> {
    kmeans_with(rows, k, seed, &ClusterConfig::default())
}

pub fn kmeans_with(rows: &DMatrix<f64>, k: usize, seed: u64, cfg: &ClusterConfig) -> Result<ClusterResult> {
    cluster_with(rows, k, seed, cfg, &SquaredEuclidean)
}
