//! Seeded simulation studies and the political-blogs analysis.
//!
//! Every grid cell gets a seed derived from the master seed and the cell's
//! own parameters, and every repetition a seed derived from the cell seed.
//! Cells and repetitions run as one flat parallel job list, so tables are
//! reproducible bit-for-bit from `(spec, seed)` at any thread count.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::graph::{largest_connected_component, load_edge_list, AdjacencyMatrix};
use crate::models::{sim1_params, sim3_params, ModelParams, Sim2Design};
use crate::ncv::{ncv_select, repeat_ncv_reports, Candidate, LossFn, ModelKind, NcvConfig, NcvReport, SelectionTable};
use crate::seed::{self, tag};

pub const DEFAULT_REPS: usize = 20;
pub const POLBLOGS_KMAX: usize = 6;
pub const POLBLOGS_HINT: &str = "download the political blogs network (polblogs.gml from Mark Newman's network data page) \
     and convert it to a whitespace-separated edge list";

/// Settings shared by every experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub reps: usize,
    #[serde(rename = "V")]
    pub folds: usize,
    pub loss: LossFn,
    pub seed: u64,
    /// Candidates are `K = 1..=K_true + extra_k`.
    pub extra_k: usize,
    #[serde(skip)]
    pub execution: Execution,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            reps: DEFAULT_REPS,
            folds: 3,
            loss: LossFn::NegLogLik,
            seed: 0,
            extra_k: 2,
            execution: Execution::default(),
        }
    }
}

impl RunConfig {
    fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::invalid("reps must be at least 1"));
        }
        if self.folds < 2 {
            return Err(Error::invalid("V must be at least 2"));
        }
        Ok(())
    }

    fn ncv(&self) -> NcvConfig {
        NcvConfig::default()
            .with_folds(self.folds)
            .with_loss(self.loss)
            .with_execution(self.execution)
    }
}

/// Sparsity and imbalance: `B = r * B0`, smallest community of size `n1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Sim1Spec {
    pub n: usize,
    #[serde(rename = "K")]
    pub k: Vec<usize>,
    /// Smallest community sizes; `None` means balanced (`n / K`).
    pub n1: Vec<Option<usize>>,
    pub r: Vec<f64>,
    #[serde(flatten)]
    pub run: RunConfig,
}

impl Default for Sim1Spec {
    fn default() -> Self {
        Self {
            n: 1000,
            k: vec![2, 3, 4],
            n1: vec![Some(100), Some(200), None],
            r: vec![0.01, 0.02, 0.05, 0.1, 0.2],
            run: RunConfig::default(),
        }
    }
}

/// Random block matrices filtered on their K-th singular value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Sim2Spec {
    pub n: Vec<usize>,
    #[serde(rename = "K")]
    pub k: Vec<usize>,
    #[serde(flatten)]
    pub run: RunConfig,
}

impl Default for Sim2Spec {
    fn default() -> Self {
        Self {
            n: vec![600, 1200],
            k: vec![1, 2, 3, 4],
            run: RunConfig::default(),
        }
    }
}

/// Joint model-type and K selection on SBM and DCBM data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Sim3Spec {
    pub n: Vec<usize>,
    #[serde(rename = "K")]
    pub k: Vec<usize>,
    pub model: Vec<ModelKind>,
    #[serde(flatten)]
    pub run: RunConfig,
}

impl Default for Sim3Spec {
    fn default() -> Self {
        Self {
            n: vec![300, 600, 1200],
            k: vec![1, 2, 3, 4],
            model: vec![ModelKind::Sbm, ModelKind::Dcbm],
            run: RunConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolblogsSpec {
    pub path: std::path::PathBuf,
    #[serde(default)]
    pub run: RunConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "which", rename_all = "lowercase")]
pub enum ExperimentSpec {
    Sim1(Sim1Spec),
    Sim2(Sim2Spec),
    Sim3(Sim3Spec),
    Polblogs(PolblogsSpec),
}

/// One grid point. Fields that do not apply to an experiment are empty.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuccessRow {
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub n1: Option<usize>,
    pub r: Option<f64>,
    pub model: Option<ModelKind>,
    pub reps: usize,
    pub seed: u64,
    /// Repetitions selecting the true K (and the true type, where candidates
    /// include both).
    pub successes: usize,
    pub rate: f64,
    pub type_correct: Option<usize>,
    pub p_type: Option<f64>,
    pub p_k_given_type: Option<f64>,
    pub under_selected: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuccessTable {
    pub experiment: String,
    pub seed: u64,
    #[serde(rename = "V")]
    pub folds: usize,
    pub loss: LossFn,
    pub extra_k: usize,
    pub rows: Vec<SuccessRow>,
}

impl SuccessTable {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    /// Pooled fraction of repetitions with `K_hat < K`.
    pub fn under_selection_rate(&self) -> f64 {
        let reps: usize = self.rows.iter().map(|r| r.reps).sum();
        let under: usize = self.rows.iter().map(|r| r.under_selected).sum();
        under as f64 / reps as f64
    }
}

/// A grid point before it is run.
#[derive(Clone, Debug)]
struct Cell {
    n: usize,
    k: usize,
    n1: Option<usize>,
    r: Option<f64>,
    model: Option<ModelKind>,
    seed: u64,
    candidates: Vec<Candidate>,
}

impl Cell {
    fn row(&self, reps: usize, selected: &[Candidate]) -> SuccessRow {
        let k_hits = |c: &Candidate| c.k == self.k;
        let under_selected = selected.iter().filter(|c| c.k < self.k).count();
        match self.model {
            Some(m) => {
                let typed: Vec<&Candidate> = selected.iter().filter(|c| c.model == m).collect();
                let successes = typed.iter().filter(|c| k_hits(c)).count();
                SuccessRow {
                    n: self.n,
                    k: self.k,
                    n1: self.n1,
                    r: self.r,
                    model: Some(m),
                    reps,
                    seed: self.seed,
                    successes,
                    rate: successes as f64 / reps as f64,
                    type_correct: Some(typed.len()),
                    p_type: Some(typed.len() as f64 / reps as f64),
                    p_k_given_type: (!typed.is_empty()).then(|| successes as f64 / typed.len() as f64),
                    under_selected,
                }
            }
            None => {
                let successes = selected.iter().filter(|c| k_hits(c)).count();
                SuccessRow {
                    n: self.n,
                    k: self.k,
                    n1: self.n1,
                    r: self.r,
                    model: None,
                    reps,
                    seed: self.seed,
                    successes,
                    rate: successes as f64 / reps as f64,
                    type_correct: None,
                    p_type: None,
                    p_k_given_type: None,
                    under_selected,
                }
            }
        }
    }
}

fn cell_seed(master: u64, experiment: u64, n: usize, k: usize, extra: &[u64]) -> u64 {
    let mut path = vec![tag::CELL, experiment, n as u64, k as u64];
    path.extend_from_slice(extra);
    seed::derive(master, &path)
}

/// Run every cell's repetitions and tabulate. `draw` samples a graph for a
/// cell from the given rng.
fn run_cells<F>(experiment: &str, run: &RunConfig, cells: Vec<Cell>, draw: F) -> Result<SuccessTable>
where
    F: Fn(&Cell, &mut seed::Rng) -> Result<AdjacencyMatrix> + Sync + Send,
{
    run.validate()?;
    let ncv = run.ncv();
    let jobs = cells.len() * run.reps;
    let selected: Vec<Candidate> = run.execution.try_map(jobs, |job| {
        let cell = &cells[job / run.reps];
        let rep_seed = seed::derive(cell.seed, &[tag::REP, (job % run.reps) as u64]);
        let graph = draw(cell, &mut seed::rng(seed::derive(rep_seed, &[tag::SAMPLE])))?;
        let report = ncv_select(&graph, &cell.candidates, &ncv, seed::derive(rep_seed, &[tag::NCV]))?;
        log::debug!("{experiment} n={} K={}: selected {}", cell.n, cell.k, report.selected);
        Ok::<_, Error>(report.selected)
    })?;
    let rows = cells
        .iter()
        .zip(selected.chunks(run.reps))
        .map(|(cell, sel)| cell.row(run.reps, sel))
        .collect();
    Ok(SuccessTable {
        experiment: experiment.to_string(),
        seed: run.seed,
        folds: run.folds,
        loss: run.loss,
        extra_k: run.extra_k,
        rows,
    })
}

fn sbm_candidates(k: usize, extra: usize) -> Vec<Candidate> {
    Candidate::grid(&[ModelKind::Sbm], k + extra)
}

/// One row per `(r, K, n1)`. With `K = 1` the only valid size is `n1 = n`.
pub fn run_sim1(spec: &Sim1Spec) -> Result<SuccessTable> {
    let run = &spec.run;
    let mut cells = Vec::new();
    for &r in &spec.r {
        for &k in &spec.k {
            for &n1 in &spec.n1 {
                let size = match (k, n1) {
                    (1, _) => spec.n,
                    (_, Some(s)) => s,
                    (_, None) => spec.n / k,
                };
                // validate now so a bad grid fails before any work
                sim1_params(spec.n, k, size, r)?;
                cells.push(Cell {
                    n: spec.n,
                    k,
                    n1: Some(size),
                    r: Some(r),
                    model: None,
                    seed: cell_seed(run.seed, 1, spec.n, k, &[size as u64, r.to_bits()]),
                    candidates: sbm_candidates(k, run.extra_k),
                });
            }
        }
    }
    cells.dedup_by(|a, b| a.n1 == b.n1 && a.k == b.k && a.r == b.r);
    run_cells("sim1", run, cells, |cell, rng| {
        let p = ModelParams::from(sim1_params(cell.n, cell.k, cell.n1.expect("set"), cell.r.expect("set"))?);
        p.sample(rng)
    })
}

/// One row per `(n, K)`.
pub fn run_sim2(spec: &Sim2Spec) -> Result<SuccessTable> {
    let run = &spec.run;
    let mut designs = Vec::new();
    for &k in &spec.k {
        designs.push((k, Sim2Design::standard(k)?));
    }
    let mut cells = Vec::new();
    for &n in &spec.n {
        for &k in &spec.k {
            if n < k {
                return Err(Error::invalid(format!("n = {n} is smaller than K = {k}")));
            }
            cells.push(Cell {
                n,
                k,
                n1: None,
                r: None,
                model: None,
                seed: cell_seed(run.seed, 2, n, k, &[]),
                candidates: sbm_candidates(k, run.extra_k),
            });
        }
    }
    run_cells("sim2", run, cells, |cell, rng| {
        let design = &designs.iter().find(|(k, _)| *k == cell.k).expect("design per K").1;
        ModelParams::from(design.params(cell.n, rng)?).sample(rng)
    })
}

/// One row per `(n, K, model)`; candidates are both model types.
pub fn run_sim3(spec: &Sim3Spec) -> Result<SuccessTable> {
    let run = &spec.run;
    let mut cells = Vec::new();
    for &n in &spec.n {
        for &k in &spec.k {
            if n < k || k == 0 {
                return Err(Error::invalid(format!("cannot fill K = {k} communities with n = {n} nodes")));
            }
            for &m in &spec.model {
                cells.push(Cell {
                    n,
                    k,
                    n1: None,
                    r: None,
                    model: Some(m),
                    seed: cell_seed(run.seed, 3, n, k, &[m as u64]),
                    candidates: Candidate::grid(&[ModelKind::Sbm, ModelKind::Dcbm], k + run.extra_k),
                });
            }
        }
    }
    run_cells("sim3", run, cells, |cell, rng| {
        sim3_params(cell.n, cell.k, cell.model.expect("set"), rng)?.sample(rng)
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub model: ModelKind,
    #[serde(rename = "K")]
    pub k: usize,
    pub total_loss: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolblogsReport {
    /// Nodes and edges of the largest connected component.
    pub n: usize,
    pub edges: usize,
    pub reps: usize,
    pub seed: u64,
    pub selections: SelectionTable,
    pub modal: Candidate,
    /// Total loss per candidate from the first splitting.
    pub curves: Vec<CurvePoint>,
}

impl PolblogsReport {
    pub fn write_curves_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for p in &self.curves {
            w.serialize(p)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    /// A one-row table scoring selections against `(DCBM, 2)`.
    pub fn success_table(&self, run: &RunConfig) -> SuccessTable {
        let target = Candidate::dcbm(2);
        let typed: usize = self
            .selections
            .entries
            .iter()
            .filter(|e| e.model == target.model)
            .map(|e| e.count)
            .sum();
        let successes = self.selections.count(target);
        let under: usize = self.selections.entries.iter().filter(|e| e.k < target.k).map(|e| e.count).sum();
        SuccessTable {
            experiment: "polblogs".into(),
            seed: self.seed,
            folds: run.folds,
            loss: run.loss,
            extra_k: POLBLOGS_KMAX - target.k,
            rows: vec![SuccessRow {
                n: self.n,
                k: target.k,
                n1: None,
                r: None,
                model: Some(target.model),
                reps: self.reps,
                seed: self.seed,
                successes,
                rate: successes as f64 / self.reps as f64,
                type_correct: Some(typed),
                p_type: Some(typed as f64 / self.reps as f64),
                p_k_given_type: (typed > 0).then(|| successes as f64 / typed as f64),
                under_selected: under,
            }],
        }
    }
}

/// Selection over `{SBM, DCBM} x {1..6}` on the largest connected component
/// of the edge list at `path`, repeated over independent splittings.
pub fn run_polblogs(path: impl AsRef<Path>, run: &RunConfig) -> Result<PolblogsReport> {
    let path = path.as_ref();
    run.validate()?;
    if !path.exists() {
        return Err(Error::MissingData {
            path: path.to_path_buf(),
            hint: POLBLOGS_HINT.to_string(),
        });
    }
    let (graph, _) = load_edge_list(path, true)?;
    let (lcc, _) = largest_connected_component(&graph);
    let candidates = Candidate::grid(&[ModelKind::Sbm, ModelKind::Dcbm], POLBLOGS_KMAX);
    let reports = repeat_ncv_reports(&lcc, &candidates, &run.ncv(), run.reps, run.seed)?;
    Ok(polblogs_report(&lcc, &reports, run))
}

fn polblogs_report(lcc: &AdjacencyMatrix, reports: &[NcvReport], run: &RunConfig) -> PolblogsReport {
    let selections = SelectionTable::from_reports(run.seed, reports);
    let curves = reports[0]
        .candidates
        .iter()
        .map(|c| CurvePoint {
            model: c.model,
            k: c.k,
            total_loss: c.total,
        })
        .collect();
    PolblogsReport {
        n: lcc.n(),
        edges: lcc.edge_count(),
        reps: reports.len(),
        seed: run.seed,
        modal: selections.modal().expect("at least one rep"),
        selections,
        curves,
    }
}
