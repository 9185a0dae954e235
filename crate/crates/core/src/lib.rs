//! V-fold network cross-validation (NCV) for choosing the number of
//! communities and the model type (SBM or DCBM) from one observed network.
//!
//! The pipeline for a single fold is: take the rows of the adjacency matrix
//! outside the held-out node subset, cluster all `n` nodes from the right
//! singular vectors of that rectangle, estimate block probabilities from the
//! fitting node pairs, and score the held-out diagonal block.
//!
//! ```no_run
//! use ncv::{ncv_select, Candidate, NcvConfig, ModelKind};
//! # fn main() -> Result<(), ncv::Error> {
//! let (graph, _ids) = ncv::graph::load_edge_list("graph.txt", true)?;
//! let candidates = Candidate::grid(&[ModelKind::Sbm, ModelKind::Dcbm], 6);
//! let report = ncv_select(&graph, &candidates, &NcvConfig::default(), 7)?;
//! println!("{:?}", report.selected);
//! # Ok(())
//! # }
//! ```

pub mod error;
pub mod estimate;
pub mod exec;
pub mod graph;
pub mod models;
pub mod ncv;
pub mod seed;
pub mod sim;
pub mod spectral;

pub use error::{Error, Result};
pub use exec::Execution;
pub use ncv::{
    fold_fit_validate, ncv_select, repeat_ncv, Candidate, CandidateLoss, LossFn, ModelKind,
    NcvConfig, NcvReport, SelectionTable,
};
