//! V-fold network cross-validation with block-wise node-pair splitting.
//!
//! For fold `v`, the rows of the adjacency matrix outside `N_v` form the
//! fitting rectangle; all `n` nodes are clustered from it, block
//! probabilities are estimated from the fitting pairs, and the loss is
//! summed over the held-out block `A[N_v, N_v]`.
//!
//! Held-out losses are summed over ordered pairs `(i, j)`, `i != j`, i.e.
//! twice the unordered sum. Selection is unaffected by the factor.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{estimate_b_sbm, estimate_dcbm, Fit};
use crate::exec::Execution;
use crate::graph::{partition_nodes, AdjacencyMatrix, FoldPartition, NodeSet, RectView};
use crate::seed::{self, tag};
use crate::spectral::{cluster_basis, spherical_cluster_basis, top_k_right_singular, ClusterConfig, SingularBasis};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Sbm,
    Dcbm,
}

impl ModelKind {
    fn index(self) -> u64 {
        match self {
            ModelKind::Sbm => 0,
            ModelKind::Dcbm => 1,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Sbm => "sbm",
            ModelKind::Dcbm => "dcbm",
        })
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sbm" => Ok(ModelKind::Sbm),
            "dcbm" => Ok(ModelKind::Dcbm),
            other => Err(Error::invalid(format!("unknown model type {other:?}"))),
        }
    }
}

/// A model type paired with a number of communities.
///
/// Ordered by `k`, then SBM before DCBM; selection ties resolve to the
/// smaller candidate in this order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Candidate {
    pub model: ModelKind,
    #[serde(rename = "K")]
    pub k: usize,
}

impl Candidate {
    pub fn new(model: ModelKind, k: usize) -> Self {
        Self { model, k }
    }

    pub fn sbm(k: usize) -> Self {
        Self::new(ModelKind::Sbm, k)
    }

    pub fn dcbm(k: usize) -> Self {
        Self::new(ModelKind::Dcbm, k)
    }

    /// Every model in `models` with every `k` in `1..=kmax`.
    pub fn grid(models: &[ModelKind], kmax: usize) -> Vec<Self> {
        models
            .iter()
            .flat_map(|&m| (1..=kmax).map(move |k| Self::new(m, k)))
            .collect()
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.k.cmp(&other.k).then(self.model.cmp(&other.model))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Candidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(K={})", self.model, self.k)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum LossFn {
    /// `(x - p)^2`
    #[serde(rename = "l2")]
    Squared,
    /// `-x ln p - (1 - x) ln(1 - p)`
    #[default]
    #[serde(rename = "nll")]
    NegLogLik,
}

impl LossFn {
    /// Loss for an observed edge indicator `x` under probability `p`. The
    /// log-likelihood clamps `p` away from 0 and 1.
    pub fn loss(self, x: bool, p: f64) -> f64 {
        match self {
            LossFn::Squared => {
                let d = f64::from(u8::from(x)) - p;
                d * d
            }
            LossFn::NegLogLik => {
                let p = crate::estimate::clamp_prob(p);
                if x {
                    -p.ln()
                } else {
                    -(1.0 - p).ln()
                }
            }
        }
    }
}

impl fmt::Display for LossFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossFn::Squared => "l2",
            LossFn::NegLogLik => "nll",
        })
    }
}

impl FromStr for LossFn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l2" | "squared" => Ok(LossFn::Squared),
            "nll" | "negloglik" => Ok(LossFn::NegLogLik),
            other => Err(Error::invalid(format!("unknown loss {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct NcvConfig {
    pub folds: usize,
    pub loss: LossFn,
    pub execution: Execution,
    pub cluster: ClusterConfig,
}

impl Default for NcvConfig {
    fn default() -> Self {
        Self {
            folds: 3,
            loss: LossFn::NegLogLik,
            execution: Execution::default(),
            cluster: ClusterConfig::default(),
        }
    }
}

impl NcvConfig {
    pub fn with_loss(mut self, loss: LossFn) -> Self {
        self.loss = loss;
        self
    }

    pub fn with_folds(mut self, folds: usize) -> Self {
        self.folds = folds;
        self
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self.cluster.execution = execution;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateLoss {
    pub model: ModelKind,
    #[serde(rename = "K")]
    pub k: usize,
    pub fold_losses: Vec<f64>,
    pub total: f64,
}

impl CandidateLoss {
    pub fn candidate(&self) -> Candidate {
        Candidate::new(self.model, self.k)
    }
}

/// Per-fold and total validation losses for every candidate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NcvReport {
    pub seed: u64,
    #[serde(rename = "V")]
    pub folds: usize,
    pub loss: LossFn,
    pub candidates: Vec<CandidateLoss>,
    pub selected: Candidate,
}

impl NcvReport {
    pub fn get(&self, c: Candidate) -> Option<&CandidateLoss> {
        self.candidates.iter().find(|l| l.candidate() == c)
    }
}

/// One fold's fitting rectangle and its singular basis, shared by candidates.
struct FoldContext<'a> {
    graph: &'a AdjacencyMatrix,
    fitting: NodeSet,
    held: &'a NodeSet,
    basis: SingularBasis,
}

impl<'a> FoldContext<'a> {
    fn new(graph: &'a AdjacencyMatrix, partition: &'a FoldPartition, v: usize, kmax: usize) -> Result<Self> {
        if v >= partition.len() {
            return Err(Error::invalid(format!("fold {v} out of range for V = {}", partition.len())));
        }
        if partition.n() != graph.n() {
            return Err(Error::DimensionMismatch("partition and graph sizes differ".into()));
        }
        let held = partition.fold(v);
        if held.len() < 2 {
            return Err(Error::invalid(format!("fold {v} has {} node(s); at least 2 needed", held.len())));
        }
        let fitting = held.complement(graph.n());
        let basis = top_k_right_singular(&RectView::new(graph, &fitting)?, kmax)?;
        Ok(Self {
            graph,
            fitting,
            held,
            basis,
        })
    }

    fn fit(&self, candidate: Candidate, seed: u64, cluster: &ClusterConfig) -> Result<Fit> {
        let basis = self.basis.truncate(candidate.k);
        Ok(match candidate.model {
            ModelKind::Sbm => {
                let g = cluster_basis(&basis, seed, cluster)?;
                estimate_b_sbm(self.graph, &self.fitting, self.held, &g, candidate.k)?.into()
            }
            ModelKind::Dcbm => {
                let (g, psi) = spherical_cluster_basis(&basis, seed, cluster)?;
                estimate_dcbm(self.graph, &self.fitting, self.held, &g, &psi, candidate.k)?.into()
            }
        })
    }

    fn loss(&self, fit: &Fit, loss: LossFn) -> f64 {
        held_out_loss(self.graph, self.held, fit, loss)
    }
}

/// Sum of `loss(A_ij, P_ij)` over ordered pairs of distinct held-out nodes.
pub fn held_out_loss(graph: &AdjacencyMatrix, held: &NodeSet, fit: &Fit, loss: LossFn) -> f64 {
    let mut is_edge = vec![false; graph.n()];
    let mut total = 0.0;
    for &i in held.ids() {
        for &j in graph.neighbors(i) {
            is_edge[j as usize] = true;
        }
        for &j in held.ids() {
            if j != i {
                total += loss.loss(is_edge[j], fit.prob(i, j));
            }
        }
        for &j in graph.neighbors(i) {
            is_edge[j as usize] = false;
        }
    }
    total
}

fn fit_seed(master: u64, v: usize, c: Candidate) -> u64 {
    seed::derive(master, &[tag::FIT, v as u64, c.model.index(), c.k as u64])
}

/// Fit `candidate` on the rectangle of rows outside fold `v` and return its
/// validation loss on the fold's diagonal block.
///
/// `seed` is the master seed of the run; the clustering stream is derived
/// from it, the fold index and the candidate, matching [`ncv_select`].
pub fn fold_fit_validate(
    graph: &AdjacencyMatrix,
    partition: &FoldPartition,
    v: usize,
    candidate: Candidate,
    loss: LossFn,
    seed: u64,
) -> Result<f64> {
    if candidate.k == 0 {
        return Err(Error::invalid("candidate K must be at least 1"));
    }
    let ctx = FoldContext::new(graph, partition, v, candidate.k)?;
    let fit = ctx.fit(candidate, fit_seed(seed, v, candidate), &ClusterConfig::default())?;
    Ok(ctx.loss(&fit, loss))
}

/// The fitted model for `candidate` on fold `v`, for inspection.
pub fn fold_fit(graph: &AdjacencyMatrix, partition: &FoldPartition, v: usize, candidate: Candidate, seed: u64) -> Result<Fit> {
    if candidate.k == 0 {
        return Err(Error::invalid("candidate K must be at least 1"));
    }
    let ctx = FoldContext::new(graph, partition, v, candidate.k)?;
    ctx.fit(candidate, fit_seed(seed, v, candidate), &ClusterConfig::default())
}

/// The node partition [`ncv_select`] draws for a given seed.
pub fn ncv_partition(n: usize, folds: usize, seed: u64) -> Result<FoldPartition> {
    partition_nodes(n, folds, seed::derive(seed, &[tag::PARTITION]))
}

/// V-fold network cross-validation over `candidates`.
///
/// One node partition is drawn and shared by every candidate. The selected
/// candidate has the smallest total loss; exact ties go to the smaller `K`,
/// then to SBM.
pub fn ncv_select(graph: &AdjacencyMatrix, candidates: &[Candidate], cfg: &NcvConfig, seed: u64) -> Result<NcvReport> {
    if candidates.is_empty() {
        return Err(Error::invalid("no candidates"));
    }
    if let Some(c) = candidates.iter().find(|c| c.k == 0) {
        return Err(Error::invalid(format!("candidate {c} has K = 0")));
    }
    let partition = ncv_partition(graph.n(), cfg.folds, seed)?;
    let kmax = candidates.iter().map(|c| c.k).max().expect("nonempty");
    let per_fold: Vec<Vec<f64>> = cfg.execution.try_map(partition.len(), |v| {
        let ctx = FoldContext::new(graph, &partition, v, kmax)?;
        cfg.execution.try_map(candidates.len(), |ci| {
            let c = candidates[ci];
            let fit = ctx.fit(c, fit_seed(seed, v, c), &cfg.cluster)?;
            Ok::<_, Error>(ctx.loss(&fit, cfg.loss))
        })
    })?;
    let losses: Vec<CandidateLoss> = candidates
        .iter()
        .enumerate()
        .map(|(ci, c)| {
            let fold_losses: Vec<f64> = per_fold.iter().map(|f| f[ci]).collect();
            CandidateLoss {
                model: c.model,
                k: c.k,
                total: fold_losses.iter().sum(),
                fold_losses,
            }
        })
        .collect();
    let selected = losses
        .iter()
        .min_by(|a, b| a.total.total_cmp(&b.total).then(a.candidate().cmp(&b.candidate())))
        .expect("nonempty")
        .candidate();
    Ok(NcvReport {
        seed,
        folds: cfg.folds,
        loss: cfg.loss,
        candidates: losses,
        selected,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionEntry {
    pub model: ModelKind,
    #[serde(rename = "K")]
    pub k: usize,
    pub count: usize,
    pub frequency: f64,
}

/// How often each candidate was selected across repeated splits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionTable {
    pub seed: u64,
    pub reps: usize,
    /// Candidates that were selected at least once, in candidate order.
    pub entries: Vec<SelectionEntry>,
}

impl SelectionTable {
    pub fn from_reports(seed: u64, reports: &[NcvReport]) -> Self {
        let mut selected: Vec<Candidate> = reports.iter().map(|r| r.selected).collect();
        selected.sort();
        let reps = reports.len();
        let mut entries: Vec<SelectionEntry> = Vec::new();
        for c in selected {
            match entries.last_mut() {
                Some(e) if e.model == c.model && e.k == c.k => e.count += 1,
                _ => entries.push(SelectionEntry {
                    model: c.model,
                    k: c.k,
                    count: 1,
                    frequency: 0.0,
                }),
            }
        }
        for e in &mut entries {
            e.frequency = e.count as f64 / reps as f64;
        }
        Self { seed, reps, entries }
    }

    pub fn count(&self, c: Candidate) -> usize {
        self.entries
            .iter()
            .find(|e| e.model == c.model && e.k == c.k)
            .map_or(0, |e| e.count)
    }

    pub fn frequency(&self, c: Candidate) -> f64 {
        self.count(c) as f64 / self.reps as f64
    }

    /// Most frequently selected candidate; ties go to the smaller candidate.
    pub fn modal(&self) -> Option<Candidate> {
        self.entries
            .iter()
            .max_by(|a, b| a.count.cmp(&b.count).then(Candidate::new(b.model, b.k).cmp(&Candidate::new(a.model, a.k))))
            .map(|e| Candidate::new(e.model, e.k))
    }
}

/// Seed used for repetition `rep` of [`repeat_ncv`].
pub fn rep_seed(master: u64, rep: usize) -> u64 {
    seed::derive(master, &[tag::REP, rep as u64])
}

/// Run [`ncv_select`] `reps` times with independent splits; returns every report.
pub fn repeat_ncv_reports(
    graph: &AdjacencyMatrix,
    candidates: &[Candidate],
    cfg: &NcvConfig,
    reps: usize,
    master_seed: u64,
) -> Result<Vec<NcvReport>> {
    if reps == 0 {
        return Err(Error::invalid("reps must be at least 1"));
    }
    cfg.execution
        .try_map(reps, |r| ncv_select(graph, candidates, cfg, rep_seed(master_seed, r)))
}

/// Selection frequencies over `reps` independent splits.
pub fn repeat_ncv(
    graph: &AdjacencyMatrix,
    candidates: &[Candidate],
    cfg: &NcvConfig,
    reps: usize,
    master_seed: u64,
) -> Result<SelectionTable> {
    let reports = repeat_ncv_reports(graph, candidates, cfg, reps, master_seed)?;
    Ok(SelectionTable::from_reports(master_seed, &reports))
}
