//! Top-k right singular vectors of a rectangular matrix.
//!
//! Up to [`DENSE_LIMIT`] on the short side the smaller Gram matrix is
//! eigendecomposed densely; above it a block subspace iteration on `M^T M`
//! with Rayleigh-Ritz extraction is used, touching `M` only through products.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::RectView;
use crate::seed;

/// Short-side size above which the iterative solver takes over.
pub const DENSE_LIMIT: usize = 2000;

const ITER_TOL: f64 = 1e-10;
const ITER_MAX: usize = 300;
const ITER_OVERSAMPLE: usize = 8;
/// Relative size below which a singular value is treated as zero.
const NULL_TOL: f64 = 1e-10;

/// Something with the shape and products of an `nrows x ncols` matrix.
pub trait Rectangle: Sync {
    fn shape(&self) -> (usize, usize);
    fn to_dense(&self) -> DMatrix<f64>;
    /// `M X` for `X` with `ncols` rows.
    fn mul(&self, x: &DMatrix<f64>) -> DMatrix<f64>;
    /// `M^T Y` for `Y` with `nrows` rows.
    fn mul_t(&self, y: &DMatrix<f64>) -> DMatrix<f64>;
}

impl Rectangle for DMatrix<f64> {
    fn shape(&self) -> (usize, usize) {
        (self.nrows(), self.ncols())
    }

    fn to_dense(&self) -> DMatrix<f64> {
        self.clone()
    }

    fn mul(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self * x
    }

    fn mul_t(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        self.tr_mul(y)
    }
}

impl Rectangle for RectView<'_> {
    fn shape(&self) -> (usize, usize) {
        RectView::shape(self)
    }

    fn to_dense(&self) -> DMatrix<f64> {
        let (r, c) = RectView::shape(self);
        let mut m = DMatrix::zeros(r, c);
        for row in 0..r {
            for &j in self.row_neighbors(row) {
                m[(row, j as usize)] = 1.0;
            }
        }
        m
    }

    fn mul(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let (r, _) = RectView::shape(self);
        let mut out = DMatrix::zeros(r, x.ncols());
        for col in 0..x.ncols() {
            let xc = x.column(col);
            for row in 0..r {
                out[(row, col)] = self.row_neighbors(row).iter().map(|&j| xc[j as usize]).sum();
            }
        }
        out
    }

    fn mul_t(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        let (r, c) = RectView::shape(self);
        let mut out = DMatrix::zeros(c, y.ncols());
        for col in 0..y.ncols() {
            for row in 0..r {
                let w = y[(row, col)];
                if w != 0.0 {
                    for &j in self.row_neighbors(row) {
                        out[(j as usize, col)] += w;
                    }
                }
            }
        }
        out
    }
}

/// Top-k right singular vectors (as columns) and their singular values.
#[derive(Clone, Debug, PartialEq)]
pub struct SingularBasis {
    pub vectors: DMatrix<f64>,
    pub sigma: Vec<f64>,
}

impl SingularBasis {
    pub fn k(&self) -> usize {
        self.sigma.len()
    }

    pub fn n(&self) -> usize {
        self.vectors.nrows()
    }

    /// Leading `k` columns.
    pub fn truncate(&self, k: usize) -> SingularBasis {
        let k = k.min(self.k());
        SingularBasis {
            vectors: self.vectors.columns(0, k).into_owned(),
            sigma: self.sigma[..k].to_vec(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SvdMethod {
    /// Dense when the short side is at most [`DENSE_LIMIT`].
    Auto,
    Dense,
    Iterative,
}

pub fn top_k_right_singular<M: Rectangle + ?Sized>(m: &M, k: usize) -> Result<SingularBasis> {
    top_k_right_singular_with(m, k, SvdMethod::Auto)
}

pub fn top_k_right_singular_with<M: Rectangle + ?Sized>(m: &M, k: usize, method: SvdMethod) -> Result<SingularBasis> {
    let (r, c) = m.shape();
    if k == 0 || k > r.min(c) {
        return Err(Error::invalid(format!("cannot take {k} singular vectors of a {r}x{c} matrix")));
    }
    let dense = match method {
        SvdMethod::Auto => r.min(c) <= DENSE_LIMIT,
        SvdMethod::Dense => true,
        SvdMethod::Iterative => false,
    };
    let mut basis = if dense { dense_basis(m, k) } else { iterative_basis(m, k) };
    fix_signs(&mut basis.vectors);
    Ok(basis)
}

/// Eigenpairs of a symmetric matrix, eigenvalues nonincreasing.
fn sorted_eigen(g: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(g);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_columns(&order.iter().map(|&i| eig.eigenvectors.column(i)).collect::<Vec<_>>());
    (values, vectors)
}

fn dense_basis<M: Rectangle + ?Sized>(m: &M, k: usize) -> SingularBasis {
    let (r, c) = m.shape();
    let a = m.to_dense();
    if c <= r {
        let (_, vectors) = sorted_eigen(a.tr_mul(&a));
        let vectors = vectors.columns(0, k).into_owned();
        return SingularBasis {
            sigma: image_norms(&a, &vectors),
            vectors,
        };
    }
    // short-and-wide: left vectors from M M^T, then v = M^T u / sigma
    let (values, left) = sorted_eigen(&a * a.transpose());
    let sigma: Vec<f64> = values[..k].iter().map(|&l| l.max(0.0).sqrt()).collect();
    let floor = NULL_TOL * sigma[0].max(f64::MIN_POSITIVE);
    let mut vectors = DMatrix::zeros(c, k);
    for j in 0..k {
        if sigma[j] > floor {
            let v = a.tr_mul(&left.column(j)) / sigma[j];
            vectors.set_column(j, &v);
        }
    }
    orthonormalize(&mut vectors);
    SingularBasis {
        sigma: image_norms(&a, &vectors),
        vectors,
    }
}

/// `|M v_j|` for each column, made nonincreasing. Square roots of Gram
/// eigenvalues lose half the digits near zero; these do not.
fn image_norms(a: &DMatrix<f64>, vectors: &DMatrix<f64>) -> Vec<f64> {
    let image = a * vectors;
    let mut out: Vec<f64> = image.column_iter().map(|c| c.norm()).collect();
    for j in 1..out.len() {
        out[j] = out[j].min(out[j - 1]);
    }
    out
}

fn iterative_basis<M: Rectangle + ?Sized>(m: &M, k: usize) -> SingularBasis {
    let (r, c) = m.shape();
    let b = (k + ITER_OVERSAMPLE).min(r.min(c));
    // fixed stream so the result depends only on M
    let mut rng = seed::rng(0x5bd1_e995);
    let mut x = DMatrix::from_fn(c, b, |_, _| rng.random::<f64>() - 0.5);
    orthonormalize(&mut x);
    let mut prev: Option<Vec<f64>> = None;
    let mut ritz = Vec::new();
    for _ in 0..ITER_MAX {
        let mut q = m.mul_t(&m.mul(&x));
        orthonormalize(&mut q);
        let mq = m.mul(&q);
        let (values, w) = sorted_eigen(mq.tr_mul(&mq));
        x = &q * w;
        ritz = values;
        let converged = prev.as_ref().is_some_and(|p| {
            let scale = ritz[0].abs().max(f64::MIN_POSITIVE);
            (0..k).all(|i| (ritz[i] - p[i]).abs() <= ITER_TOL * scale)
        });
        if converged {
            break;
        }
        prev = Some(ritz.clone());
    }
    SingularBasis {
        vectors: x.columns(0, k).into_owned(),
        sigma: ritz[..k].iter().map(|&l| l.max(0.0).sqrt()).collect(),
    }
}

/// Modified Gram-Schmidt, applied twice. Columns that vanish are replaced by
/// the first standard basis vector that is independent of the others.
pub(crate) fn orthonormalize(m: &mut DMatrix<f64>) {
    let (rows, cols) = m.shape();
    let mut next_unit = 0;
    for j in 0..cols {
        let mut v: DVector<f64> = m.column(j).into_owned();
        let start_norm = v.norm();
        for _ in 0..2 {
            for i in 0..j {
                let proj = m.column(i).dot(&v);
                v.axpy(-proj, &m.column(i), 1.0);
            }
        }
        let mut norm = v.norm();
        if start_norm == 0.0 || norm <= 1e-8 * start_norm {
            loop {
                v = DVector::zeros(rows);
                v[next_unit % rows] = 1.0;
                next_unit += 1;
                for _ in 0..2 {
                    for i in 0..j {
                        let proj = m.column(i).dot(&v);
                        v.axpy(-proj, &m.column(i), 1.0);
                    }
                }
                norm = v.norm();
                if norm > 0.5 {
                    break;
                }
            }
        }
        m.set_column(j, &(v / norm));
    }
}

/// Flip each column so its largest-magnitude entry (first on ties) is positive.
fn fix_signs(m: &mut DMatrix<f64>) {
    for mut col in m.column_iter_mut() {
        let pivot = col
            .iter()
            .copied()
            .fold(0.0f64, |best, x| if x.abs() > best.abs() { x } else { best });
        if pivot < 0.0 {
            col.neg_mut();
        }
    }
}
