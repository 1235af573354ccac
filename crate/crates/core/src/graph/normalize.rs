use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{MultiViewGraph, SparseSlice};
use crate::error::{Error, Result};

/// Teleport probability used for directed slices unless overridden.
pub const DEFAULT_TELEPORT: f64 = 0.01;

const STATIONARY_TOL: f64 = 1e-10;
const STATIONARY_MAX_STEPS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationKind {
    /// `D^{-1/2} X D^{-1/2}` with `D` the column degrees.
    Symmetric,
    /// Symmetrized teleporting random walk operator for directed slices.
    DirectedTeleport { teleport: f64 },
    /// `(X + X^T) / 2` without degree scaling.
    Raw,
}

/// The solver input: `K` dense symmetric `I x I` slices.
#[derive(Debug, Clone)]
pub struct NormalizedTensor {
    slices: Vec<Array2<f64>>,
    sq_norms: Vec<f64>,
    kind: NormalizationKind,
}

impl NormalizedTensor {
    /// Wraps already-normalized slices. Each slice must be square, finite and
    /// symmetric to within `1e-10` of its largest entry; it is stored exactly
    /// symmetrized.
    pub fn new(slices: Vec<Array2<f64>>, kind: NormalizationKind) -> Result<Self> {
        let n = slices.first().map(|s| s.nrows()).unwrap_or(0);
        let mut out = Vec::with_capacity(slices.len());
        for (k, s) in slices.into_iter().enumerate() {
            if s.dim() != (n, n) {
                return Err(Error::Dimension(format!(
                    "slice {k} has shape {:?}, expected ({n}, {n})",
                    s.dim()
                )));
            }
            if s.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("slice {k}")));
            }
            let scale = s.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            for i in 0..n {
                for j in (i + 1)..n {
                    if (s[[i, j]] - s[[j, i]]).abs() > 1e-10 * scale {
                        return Err(Error::NonSymmetricSlice { view: k, row: i, col: j });
                    }
                }
            }
            let sym = (&s + &s.t()) * 0.5;
            out.push(sym);
        }
        let sq_norms = out.iter().map(|s| s.iter().map(|v| v * v).sum()).collect();
        Ok(Self {
            slices: out,
            sq_norms,
            kind,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.slices.first().map(|s| s.nrows()).unwrap_or(0)
    }

    pub fn num_views(&self) -> usize {
        self.slices.len()
    }

    pub fn slices(&self) -> &[Array2<f64>] {
        &self.slices
    }

    pub fn slice(&self, k: usize) -> &Array2<f64> {
        &self.slices[k]
    }

    /// Squared Frobenius norm of slice `k`.
    pub fn sq_norm(&self, k: usize) -> f64 {
        self.sq_norms[k]
    }

    pub fn total_sq_norm(&self) -> f64 {
        self.sq_norms.iter().sum()
    }

    pub fn kind(&self) -> NormalizationKind {
        self.kind
    }
}

fn inv_sqrt_or_zero(d: f64) -> f64 {
    if d > 0.0 {
        1.0 / d.sqrt()
    } else {
        0.0
    }
}

/// `Y_k = D_k X_k D_k` with `D_k = diag(1 / sqrt(column sums))`; nodes of
/// degree zero get a zero row and column.
pub fn symmetric_normalize(graph: &MultiViewGraph) -> Result<NormalizedTensor> {
    let n = graph.num_nodes();
    let mut slices = Vec::with_capacity(graph.num_views());
    for (k, slice) in graph.slices().iter().enumerate() {
        if let Some((row, col)) = slice.asymmetry() {
            return Err(Error::NonSymmetricSlice { view: k, row, col });
        }
        let mut degree = Array1::<f64>::zeros(n);
        for &(i, j, w) in &slice.entries {
            if w < 0.0 || !w.is_finite() {
                return Err(Error::InvalidWeight {
                    view: k,
                    row: i,
                    col: j,
                    weight: w,
                });
            }
            degree[j] += w;
        }
        let scale = degree.mapv(inv_sqrt_or_zero);
        let mut y = Array2::<f64>::zeros((n, n));
        for &(i, j, w) in &slice.entries {
            y[[i, j]] += w * scale[i] * scale[j];
        }
        slices.push(y);
    }
    NormalizedTensor::new(slices, NormalizationKind::Symmetric)
}

/// Symmetrized random-walk normalization for directed slices:
/// `S = (P^{1/2} T P^{-1/2} + P^{-1/2} T^T P^{1/2}) / 2` where `T` is the
/// transition matrix of a random walk that teleports uniformly with
/// probability `teleport` (always, from dangling nodes) and `P` is the
/// diagonal of its stationary distribution.
pub fn directed_normalize(graph: &MultiViewGraph, teleport: f64) -> Result<NormalizedTensor> {
    if !(teleport > 0.0 && teleport < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "teleport must lie in (0, 1), got {teleport}"
        )));
    }
    let n = graph.num_nodes();
    let mut slices = Vec::with_capacity(graph.num_views());
    for (k, slice) in graph.slices().iter().enumerate() {
        let x = slice.to_dense(n);
        let transition = teleport_transition(&x, teleport);
        let pi = stationary_distribution(slice, n, teleport).ok_or(Error::NoConvergence {
            view: k,
            steps: STATIONARY_MAX_STEPS,
        })?;
        let sqrt_pi = pi.mapv(f64::sqrt);
        let mut s = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                let forward = sqrt_pi[i] * transition[[i, j]] / sqrt_pi[j];
                let backward = sqrt_pi[j] * transition[[j, i]] / sqrt_pi[i];
                s[[i, j]] = 0.5 * (forward + backward);
            }
        }
        slices.push(s);
    }
    NormalizedTensor::new(slices, NormalizationKind::DirectedTeleport { teleport })
}

fn teleport_transition(x: &Array2<f64>, teleport: f64) -> Array2<f64> {
    let n = x.nrows();
    let uniform = 1.0 / n as f64;
    let mut t = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        let out: f64 = x.row(i).sum();
        if out > 0.0 {
            for j in 0..n {
                t[[i, j]] = (1.0 - teleport) * x[[i, j]] / out + teleport * uniform;
            }
        } else {
            t.row_mut(i).fill(uniform);
        }
    }
    t
}

/// Power iteration `pi <- pi T` from the uniform distribution, evaluated on
/// the sparse entries. Teleporting makes `T` primitive, so every
/// non-principal eigenvalue has modulus at most `1 - teleport`.
fn stationary_distribution(slice: &SparseSlice, n: usize, teleport: f64) -> Option<Array1<f64>> {
    if n == 0 {
        return Some(Array1::zeros(0));
    }
    let mut out_degree = vec![0.0; n];
    for &(i, _, w) in &slice.entries {
        out_degree[i] += w;
    }
    let uniform = 1.0 / n as f64;
    let mut pi = Array1::<f64>::from_elem(n, uniform);
    let mut next = Array1::<f64>::zeros(n);
    for _ in 0..STATIONARY_MAX_STEPS {
        // mass redistributed uniformly: teleports plus whole dangling rows
        let spread: f64 = (0..n)
            .map(|i| if out_degree[i] > 0.0 { teleport * pi[i] } else { pi[i] })
            .sum();
        next.fill(spread * uniform);
        for &(i, j, w) in &slice.entries {
            next[j] += (1.0 - teleport) * pi[i] * w / out_degree[i];
        }
        let total = next.sum();
        next /= total;
        let change: f64 = next.iter().zip(pi.iter()).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut pi, &mut next);
        if change <= STATIONARY_TOL {
            return Some(pi);
        }
    }
    None
}

/// `(X + X^T) / 2` per slice, without any degree scaling.
pub fn raw_symmetrized(graph: &MultiViewGraph) -> Result<NormalizedTensor> {
    let n = graph.num_nodes();
    let slices = graph
        .slices()
        .iter()
        .map(|s| {
            let x = s.to_dense(n);
            (&x + &x.t()) * 0.5
        })
        .collect();
    NormalizedTensor::new(slices, NormalizationKind::Raw)
}

/// Dispatches on `kind`.
pub fn normalize(graph: &MultiViewGraph, kind: NormalizationKind) -> Result<NormalizedTensor> {
    match kind {
        NormalizationKind::Symmetric => symmetric_normalize(graph),
        NormalizationKind::DirectedTeleport { teleport } => directed_normalize(graph, teleport),
        NormalizationKind::Raw => raw_symmetrized(graph),
    }
}
