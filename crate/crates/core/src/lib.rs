//! GenClus: spectral clustering for multi-view graphs whose views split into
//! several view structures, each carrying its own node clustering.
//!
//! The data tensor is modelled as `[[U, U, A B]]` where `A` assigns each view
//! to a view cluster and the columns of `U` are partitioned across view
//! clusters by `B`. Fitting alternates an exact update of `A` with a joint
//! eigendecomposition-based update of `U` and `B`.
//!
//! Module map:
//! - [`graph`]: multi-view graph storage, COO text I/O and normalization.
//! - [`linalg`]: symmetric eigendecomposition, best PSD approximation and
//!   global eigenvalue selection across view clusters.
//! - [`solver`]: the block coordinate descent solver.
//! - [`richcom`]: the symmetric Richcom baseline (multiplicative updates).
//! - [`eval`]: view assignment, matching, embedding clustering and scores.
//! - [`synth`]: synthetic quasi-clique benchmark generator.
//! - [`harness`]: experiment configuration plus quality and timing suites.

pub mod error;
pub mod eval;
pub mod graph;
pub mod harness;
pub mod linalg;
pub mod richcom;
pub mod solver;
pub mod synth;
pub(crate) mod util;

pub use error::{Error, Result};
pub use graph::{MultiViewGraph, NormalizationKind, NormalizedTensor, SparseSlice};
pub use linalg::{best_psd_approx, global_top_r_selection, sym_eig, EigenPairs, Ranking, SelectionResult};
pub use solver::{
    fit, init_model, objective, update_a, update_ub, ConstraintKind, ConstraintMode, FitOptions,
    GenClusModel, SolveReport,
};
