//! SBM and DCBM parameter containers, samplers, and the parameter
//! constructors for the three simulation designs.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{AdjacencyMatrix, Membership};
use crate::seed;

const SYM_TOL: f64 = 1e-12;

/// Symmetric `k x k` matrix of community-wise edge probabilities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct BlockMatrix {
    k: usize,
    data: Vec<f64>,
}

impl BlockMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let k = rows.len();
        if k == 0 {
            return Err(Error::invalid("block matrix must be at least 1x1"));
        }
        let mut data = Vec::with_capacity(k * k);
        for row in &rows {
            if row.len() != k {
                return Err(Error::DimensionMismatch(format!("block matrix row of length {} for k = {k}", row.len())));
            }
            data.extend_from_slice(row);
        }
        for (idx, &b) in data.iter().enumerate() {
            if !(0.0..=1.0).contains(&b) {
                return Err(Error::Probability(format!("B[{}][{}] = {b}", idx / k, idx % k)));
            }
        }
        for a in 0..k {
            for b in a + 1..k {
                if (data[a * k + b] - data[b * k + a]).abs() > SYM_TOL {
                    return Err(Error::invalid(format!("B is not symmetric at ({a}, {b})")));
                }
            }
        }
        Ok(Self { k, data })
    }

    /// `diag` on the diagonal, `off` elsewhere.
    pub fn planted(k: usize, diag: f64, off: f64) -> Result<Self> {
        Self::new((0..k).map(|a| (0..k).map(|b| if a == b { diag } else { off }).collect()).collect())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.data[a * self.k + b]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.k).map(<[f64]>::to_vec).collect()
    }

    /// Singular values in nonincreasing order.
    pub fn singular_values(&self) -> Vec<f64> {
        let m = DMatrix::from_row_slice(self.k, self.k, &self.data);
        let mut s: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().map(|l| l.abs()).collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }
}

impl TryFrom<Vec<Vec<f64>>> for BlockMatrix {
    type Error = Error;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(rows)
    }
}

impl From<BlockMatrix> for Vec<Vec<f64>> {
    fn from(b: BlockMatrix) -> Self {
        b.rows()
    }
}

/// Node activeness for a DCBM, normalized so each community's maximum is 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DegreeParams {
    psi: Vec<f64>,
}

impl DegreeParams {
    /// Validate positivity and the block-wise maximum constraint.
    pub fn new(psi: Vec<f64>, g: &Membership) -> Result<Self> {
        if psi.len() != g.n() {
            return Err(Error::DimensionMismatch(format!("{} activeness values for {} nodes", psi.len(), g.n())));
        }
        if let Some((i, &p)) = psi.iter().enumerate().find(|(_, &p)| !(p > 0.0 && p.is_finite())) {
            return Err(Error::invalid(format!("psi[{i}] = {p} must be positive")));
        }
        for (c, &m) in block_max(&psi, g).iter().enumerate() {
            if m > 0.0 && (m - 1.0).abs() > SYM_TOL {
                return Err(Error::invalid(format!("max psi in community {} is {m}, expected 1", c + 1)));
            }
        }
        Ok(Self { psi })
    }

    /// Divide each value by the maximum over its community.
    pub fn normalized(raw: Vec<f64>, g: &Membership) -> Result<Self> {
        if raw.len() != g.n() {
            return Err(Error::DimensionMismatch(format!("{} activeness values for {} nodes", raw.len(), g.n())));
        }
        let maxes = block_max(&raw, g);
        let psi = raw.iter().zip(g.labels()).map(|(&p, &l)| p / maxes[l]).collect();
        Self::new(psi, g)
    }

    pub fn values(&self) -> &[f64] {
        &self.psi
    }

    /// `psi_i / sqrt(sum of psi_j^2 over j in i's community)`.
    pub fn community_normalized(&self, g: &Membership) -> Vec<f64> {
        let mut ss = vec![0.0; g.k()];
        for (&p, &l) in self.psi.iter().zip(g.labels()) {
            ss[l] += p * p;
        }
        self.psi.iter().zip(g.labels()).map(|(&p, &l)| p / ss[l].sqrt()).collect()
    }
}

fn block_max(psi: &[f64], g: &Membership) -> Vec<f64> {
    let mut maxes = vec![0.0f64; g.k()];
    for (&p, &l) in psi.iter().zip(g.labels()) {
        maxes[l] = maxes[l].max(p);
    }
    maxes
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SbmParams {
    pub g: Membership,
    #[serde(rename = "B")]
    pub b: BlockMatrix,
}

impl SbmParams {
    pub fn new(g: Membership, b: BlockMatrix) -> Result<Self> {
        if g.k() != b.k() {
            return Err(Error::DimensionMismatch(format!("membership has k = {}, B has k = {}", g.k(), b.k())));
        }
        Ok(Self { g, b })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DcbmParams {
    pub g: Membership,
    #[serde(rename = "B")]
    pub b: BlockMatrix,
    pub psi: DegreeParams,
}

impl DcbmParams {
    pub fn new(g: Membership, b: BlockMatrix, psi: DegreeParams) -> Result<Self> {
        if g.k() != b.k() {
            return Err(Error::DimensionMismatch(format!("membership has k = {}, B has k = {}", g.k(), b.k())));
        }
        let psi = DegreeParams::new(psi.psi, &g)?;
        Ok(Self { g, b, psi })
    }
}

/// Either model family; the serialized form carries a `"model"` tag.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum ModelParams {
    Sbm(SbmParams),
    Dcbm(DcbmParams),
}

impl From<SbmParams> for ModelParams {
    fn from(p: SbmParams) -> Self {
        ModelParams::Sbm(p)
    }
}

impl From<DcbmParams> for ModelParams {
    fn from(p: DcbmParams) -> Self {
        ModelParams::Dcbm(p)
    }
}

impl ModelParams {
    pub fn membership(&self) -> &Membership {
        match self {
            ModelParams::Sbm(p) => &p.g,
            ModelParams::Dcbm(p) => &p.g,
        }
    }

    pub fn block_matrix(&self) -> &BlockMatrix {
        match self {
            ModelParams::Sbm(p) => &p.b,
            ModelParams::Dcbm(p) => &p.b,
        }
    }

    pub fn n(&self) -> usize {
        self.membership().n()
    }

    /// Edge probability for the pair `(i, j)`; defined for `i == j` too.
    pub fn pair_prob(&self, i: usize, j: usize) -> f64 {
        match self {
            ModelParams::Sbm(p) => p.b.get(p.g.label(i), p.g.label(j)),
            ModelParams::Dcbm(p) => {
                let psi = p.psi.values();
                psi[i] * psi[j] * p.b.get(p.g.label(i), p.g.label(j))
            }
        }
    }

    /// Dense `n x n` matrix of edge probabilities, diagonal included.
    pub fn expected_p(&self) -> DMatrix<f64> {
        let n = self.n();
        DMatrix::from_fn(n, n, |i, j| self.pair_prob(i, j))
    }

    /// Draw one graph: independent Bernoulli edges for `i < j`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<AdjacencyMatrix> {
        let n = self.n();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let p = self.pair_prob(i, j);
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::Probability(format!("P[{i}][{j}] = {p}")));
                }
                if rng.random::<f64>() < p {
                    edges.push((i, j));
                }
            }
        }
        AdjacencyMatrix::from_edges(n, edges)
    }
}

/// Community sizes for the sparsity/imbalance design: one community of
/// `n1` nodes and `k - 1` communities splitting the rest, remainder to the last.
pub fn sim1_sizes(n: usize, k: usize, n1: usize) -> Result<Vec<usize>> {
    if k == 0 || n1 == 0 {
        return Err(Error::invalid("k and n1 must be positive"));
    }
    if k == 1 {
        return if n1 == n {
            Ok(vec![n])
        } else {
            Err(Error::invalid(format!("with k = 1 the only community has n = {n} nodes, got n1 = {n1}")))
        };
    }
    if n1 * k > n {
        return Err(Error::invalid(format!("n1 = {n1} exceeds n / k = {n} / {k}")));
    }
    let rest = (n - n1) / (k - 1);
    let mut sizes = vec![n1];
    sizes.extend(std::iter::repeat_n(rest, k - 1));
    sizes[k - 1] += (n - n1) % (k - 1);
    Ok(sizes)
}

/// `B = r * B0` with `B0` having 3 on the diagonal and 1 elsewhere.
pub fn sim1_params(n: usize, k: usize, n1: usize, r: f64) -> Result<SbmParams> {
    if !(r > 0.0 && r < 1.0 / 3.0) {
        return Err(Error::invalid(format!("scale r = {r} must lie in (0, 1/3)")));
    }
    let sizes = sim1_sizes(n, k, n1)?;
    SbmParams::new(Membership::from_sizes(&sizes)?, BlockMatrix::planted(k, 3.0 * r, r)?)
}

/// Equal-probability multinomial labels, redrawn until no community is empty.
pub fn multinomial_membership<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<Membership> {
    if k == 0 || n < k {
        return Err(Error::invalid(format!("cannot fill {k} communities with {n} nodes")));
    }
    loop {
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let g = Membership::new(labels, k)?;
        if g.sizes().iter().all(|&s| s > 0) {
            return Ok(g);
        }
    }
}

/// Random-B design: upper-triangle entries iid `Unif(0, 0.5)`, kept only when
/// the k-th singular value is at or above the 25th percentile of a pilot sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sim2Design {
    pub k: usize,
    /// Lower bound on the k-th singular value; zero when `k == 1`.
    pub threshold: f64,
}

impl Sim2Design {
    pub const PILOT_DRAWS: usize = 200;
    pub const UPPER: f64 = 0.5;

    pub fn new(k: usize, pilot_seed: u64) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("k must be positive"));
        }
        if k == 1 {
            return Ok(Self { k, threshold: 0.0 });
        }
        let mut rng = seed::rng(pilot_seed);
        let mut pilot: Vec<f64> = (0..Self::PILOT_DRAWS)
            .map(|_| Self::raw_draw(k, &mut rng).singular_values()[k - 1])
            .collect();
        pilot.sort_by(f64::total_cmp);
        Ok(Self {
            k,
            threshold: pilot[Self::PILOT_DRAWS / 4],
        })
    }

    fn raw_draw<R: Rng + ?Sized>(k: usize, rng: &mut R) -> BlockMatrix {
        let mut rows = vec![vec![0.0; k]; k];
        for a in 0..k {
            for b in a..k {
                let x = rng.random::<f64>() * Self::UPPER;
                rows[a][b] = x;
                rows[b][a] = x;
            }
        }
        BlockMatrix::new(rows).expect("entries in [0, 0.5] and symmetric")
    }

    /// The design used by the simulation harness; its pilot stream depends only on `k`.
    pub fn standard(k: usize) -> Result<Self> {
        Self::new(k, seed::derive(0x514d32, &[seed::tag::PILOT, k as u64]))
    }

    pub fn accepts(&self, b: &BlockMatrix) -> bool {
        self.k == 1 || b.singular_values()[self.k - 1] >= self.threshold
    }

    pub fn draw_b<R: Rng + ?Sized>(&self, rng: &mut R) -> BlockMatrix {
        loop {
            let b = Self::raw_draw(self.k, rng);
            if self.accepts(&b) {
                return b;
            }
        }
    }

    pub fn params<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<SbmParams> {
        let b = self.draw_b(rng);
        SbmParams::new(multinomial_membership(n, self.k, rng)?, b)
    }
}

/// One draw of the random-B design. The pilot threshold depends only on `k`.
pub fn sim2_params<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<SbmParams> {
    Sim2Design::standard(k)?.params(n, rng)
}

/// Model family, shared by simulation specs and NCV candidates.
pub use crate::ncv::ModelKind;

/// Degree-correction design: B has 0.25 on the diagonal and 0.1 elsewhere;
/// DCBM activeness is `Unif(0.2, 1)` normalized to block-wise maximum 1.
pub fn sim3_params<R: Rng + ?Sized>(n: usize, k: usize, model: ModelKind, rng: &mut R) -> Result<ModelParams> {
    let b = BlockMatrix::planted(k, 0.25, 0.1)?;
    let g = multinomial_membership(n, k, rng)?;
    Ok(match model {
        ModelKind::Sbm => SbmParams::new(g, b)?.into(),
        ModelKind::Dcbm => {
            let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..1.0)).collect();
            let psi = DegreeParams::normalized(raw, &g)?;
            DcbmParams::new(g, b, psi)?.into()
        }
    })
}
