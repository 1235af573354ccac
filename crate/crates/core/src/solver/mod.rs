//! Block coordinate descent for `min || Y - [[U, U, A B]] ||^2` where every
//! row of `A` and every column of `B` carries at most one non-zero and the
//! columns of `U` owned by each view cluster are orthonormal.

mod fit;
mod io;
mod objective;
mod update;

use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::NormalizedTensor;
use crate::linalg::Ranking;
use crate::util::rng_from_seed;

pub use fit::{fit, fit_from, fit_with_checkpoints, indicator_model, FitOptions, SolveReport};
pub use io::ModelFile;
pub use objective::{column_quadratics, objective, reconstruction_error};
pub use update::{update_a, update_ub, UbUpdate};

/// Constraint on the non-zero entries of `A` or `B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    AllOnes,
    Unconstrained,
    NonNegative,
}

impl ConstraintKind {
    pub const ALL: [ConstraintKind; 3] = [
        ConstraintKind::AllOnes,
        ConstraintKind::Unconstrained,
        ConstraintKind::NonNegative,
    ];

    /// Eigenvalue ranking used by the joint `U`/`B` update.
    pub fn ranking(self) -> Ranking {
        match self {
            ConstraintKind::AllOnes => Ranking::Value,
            ConstraintKind::Unconstrained => Ranking::Magnitude,
            ConstraintKind::NonNegative => Ranking::Clipped,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ConstraintKind::AllOnes => "all_ones",
            ConstraintKind::Unconstrained => "unconstrained",
            ConstraintKind::NonNegative => "non_negative",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConstraintMode {
    pub a: ConstraintKind,
    pub b: ConstraintKind,
}

impl Default for ConstraintMode {
    fn default() -> Self {
        Self {
            a: ConstraintKind::NonNegative,
            b: ConstraintKind::NonNegative,
        }
    }
}

impl ConstraintMode {
    pub fn new(a: ConstraintKind, b: ConstraintKind) -> Self {
        Self { a, b }
    }

    /// All nine combinations.
    pub fn all() -> Vec<ConstraintMode> {
        ConstraintKind::ALL
            .iter()
            .flat_map(|&a| ConstraintKind::ALL.iter().map(move |&b| ConstraintMode { a, b }))
            .collect()
    }

    pub fn label(&self) -> String {
        format!("{}/{}", self.a.name(), self.b.name())
    }
}

/// Fitted factors. `partition[r]` names the view cluster owning column `r`
/// of `U`; unowned columns are zero in both `U` and `B`.
#[derive(Debug, Clone, PartialEq)]
pub struct GenClusModel {
    pub u: Array2<f64>,
    pub a: Array2<f64>,
    pub b: Array2<f64>,
    pub mode: ConstraintMode,
    pub partition: Vec<Option<usize>>,
}

impl GenClusModel {
    pub fn num_nodes(&self) -> usize {
        self.u.nrows()
    }

    pub fn rank(&self) -> usize {
        self.u.ncols()
    }

    pub fn num_views(&self) -> usize {
        self.a.nrows()
    }

    pub fn num_clusters(&self) -> usize {
        self.a.ncols()
    }

    /// Column indices of `U` owned by cluster `m`.
    pub fn columns_of(&self, m: usize) -> Vec<usize> {
        self.partition
            .iter()
            .enumerate()
            .filter(|(_, o)| **o == Some(m))
            .map(|(r, _)| r)
            .collect()
    }

    /// Views whose row of `A` is non-zero at cluster `m`.
    pub fn views_of(&self, m: usize) -> Vec<usize> {
        (0..self.num_views()).filter(|&k| self.a[[k, m]] != 0.0).collect()
    }

    /// Checks every structural invariant; returns a description of the
    /// first violation.
    pub fn check_feasible(&self, orth_tol: f64) -> std::result::Result<(), String> {
        let (i, r) = self.u.dim();
        let (k, m) = self.a.dim();
        if self.b.dim() != (m, r) || self.partition.len() != r || i == 0 || k == 0 {
            return Err(format!(
                "inconsistent shapes U {:?}, A {:?}, B {:?}, partition {}",
                self.u.dim(),
                self.a.dim(),
                self.b.dim(),
                self.partition.len()
            ));
        }
        let check_value = |kind: ConstraintKind, v: f64, what: &str| -> std::result::Result<(), String> {
            match kind {
                ConstraintKind::AllOnes if v != 1.0 => Err(format!("{what} non-zero {v} is not 1")),
                ConstraintKind::NonNegative if v < 0.0 => Err(format!("{what} non-zero {v} is negative")),
                _ => Ok(()),
            }
        };
        for row in 0..k {
            let nz: Vec<f64> = self.a.row(row).iter().copied().filter(|&v| v != 0.0).collect();
            if nz.len() > 1 {
                return Err(format!("row {row} of A has {} non-zeros", nz.len()));
            }
            for v in nz {
                check_value(self.mode.a, v, "A")?;
            }
        }
        for col in 0..r {
            let nz: Vec<(usize, f64)> = (0..m)
                .map(|c| (c, self.b[[c, col]]))
                .filter(|&(_, v)| v != 0.0)
                .collect();
            if nz.len() > 1 {
                return Err(format!("column {col} of B has {} non-zeros", nz.len()));
            }
            if let Some(&(c, v)) = nz.first() {
                if self.partition[col] != Some(c) {
                    return Err(format!("column {col} of B is owned by {c}, partition says {:?}", self.partition[col]));
                }
                check_value(self.mode.b, v, "B")?;
            }
            if self.partition[col].is_none() && self.u.column(col).iter().any(|&x| x != 0.0) {
                return Err(format!("unowned column {col} of U is non-zero"));
            }
        }
        for c in 0..m {
            let cols = self.columns_of(c);
            let sub = self.u.select(ndarray::Axis(1), &cols);
            let gram = sub.t().dot(&sub);
            for a in 0..cols.len() {
                for b in 0..cols.len() {
                    let want = if a == b { 1.0 } else { 0.0 };
                    if (gram[[a, b]] - want).abs() > orth_tol {
                        return Err(format!(
                            "U^({c}) is not orthonormal: gram[{a},{b}] = {}",
                            gram[[a, b]]
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Modified Gram-Schmidt applied twice; columns of the result are orthonormal.
pub(crate) fn orthonormalize(mut m: Array2<f64>) -> Array2<f64> {
    let cols = m.ncols();
    for _ in 0..2 {
        for j in 0..cols {
            for p in 0..j {
                let dot = m.column(p).dot(&m.column(j));
                let prev = m.column(p).to_owned();
                m.column_mut(j).scaled_add(-dot, &prev);
            }
            let norm = m.column(j).dot(&m.column(j)).sqrt();
            if norm > 0.0 {
                m.column_mut(j).mapv_inplace(|v| v / norm);
            }
        }
    }
    m
}

/// Random feasible starting point: Gaussian `U` orthonormalized within each
/// cluster, columns dealt round-robin over the `M` clusters, uniformly random
/// indicator rows for `A` and matching unit entries in `B`.
pub fn init_model(
    y: &NormalizedTensor,
    rank: usize,
    clusters: usize,
    mode: ConstraintMode,
    seed: u64,
) -> Result<GenClusModel> {
    let n = y.num_nodes();
    let k = y.num_views();
    validate_dims(n, k, rank, clusters)?;
    let mut rng = rng_from_seed(seed);
    let mut u = Array2::<f64>::zeros((n, rank));
    let mut b = Array2::<f64>::zeros((clusters, rank));
    let partition: Vec<Option<usize>> = (0..rank).map(|r| Some(r % clusters)).collect();
    for m in 0..clusters {
        let cols: Vec<usize> = (0..rank).filter(|r| r % clusters == m).collect();
        if cols.is_empty() {
            continue;
        }
        let gauss = Array2::from_shape_fn((n, cols.len()), |_| rng.sample::<f64, _>(StandardNormal));
        let q = orthonormalize(gauss);
        for (j, &c) in cols.iter().enumerate() {
            u.column_mut(c).assign(&q.column(j));
            b[[m, c]] = 1.0;
        }
    }
    let mut a = Array2::<f64>::zeros((k, clusters));
    for row in 0..k {
        a[[row, rng.random_range(0..clusters)]] = 1.0;
    }
    Ok(GenClusModel {
        u,
        a,
        b,
        mode,
        partition,
    })
}

pub(crate) fn validate_dims(nodes: usize, views: usize, rank: usize, clusters: usize) -> Result<()> {
    if nodes == 0 || views == 0 {
        return Err(Error::Dimension(format!("empty tensor ({nodes} nodes, {views} views)")));
    }
    if clusters == 0 {
        return Err(Error::InvalidArgument("need at least one view cluster".into()));
    }
    if rank == 0 || rank > clusters * nodes {
        return Err(Error::InvalidArgument(format!(
            "rank must lie in 1..={}, got {rank}",
            clusters * nodes
        )));
    }
    Ok(())
}
