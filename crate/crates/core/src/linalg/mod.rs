//! Dense symmetric eigen-kernels used by the solver.

mod selection;

use nalgebra::DMatrix;
use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

pub use selection::{global_top_r_selection, Ranking, SelectionResult};

/// Full eigendecomposition of a symmetric matrix, values in descending order.
/// Column `j` of `vectors` pairs with `values[j]`.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Array1<f64>,
    pub vectors: Array2<f64>,
}

impl EigenPairs {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `V diag(values) V^T`
    pub fn reconstruct(&self) -> Array2<f64> {
        let scaled = &self.vectors * &self.values.view().insert_axis(ndarray::Axis(0));
        scaled.dot(&self.vectors.t())
    }
}

/// Symmetric eigendecomposition. The input is symmetrized as `(Z + Z^T) / 2`
/// first. Each eigenvector is signed so that its largest-magnitude entry is
/// positive (lowest index wins among near-equal magnitudes).
pub fn sym_eig(z: &Array2<f64>) -> Result<EigenPairs> {
    let n = z.nrows();
    if z.ncols() != n {
        return Err(Error::Dimension(format!("sym_eig needs a square matrix, got {:?}", z.dim())));
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("sym_eig input".into()));
    }
    if n == 0 {
        return Ok(EigenPairs {
            values: Array1::zeros(0),
            vectors: Array2::zeros((0, 0)),
        });
    }
    let m = DMatrix::from_fn(n, n, |i, j| 0.5 * (z[[i, j]] + z[[j, i]]));
    let eig = m.symmetric_eigen();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });

    let mut values = Array1::zeros(n);
    let mut vectors = Array2::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        values[dst] = eig.eigenvalues[src];
        let col = eig.eigenvectors.column(src);
        let peak = col.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let lead = col
            .iter()
            .position(|v| v.abs() >= peak * (1.0 - 1e-10))
            .unwrap_or(0);
        let sign = if col[lead] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            vectors[[i, dst]] = sign * col[i];
        }
    }
    Ok(EigenPairs { values, vectors })
}

/// Best positive semi-definite approximation of rank at most `rank`: keeps the
/// top-`rank` eigenpairs with eigenvalues clipped at zero. The returned pairs
/// are those with strictly positive clipped values (at most `rank`).
pub fn best_psd_approx(y: &Array2<f64>, rank: usize) -> Result<(Array2<f64>, EigenPairs)> {
    let n = y.nrows();
    if rank == 0 || rank > n {
        return Err(Error::InvalidArgument(format!(
            "rank must lie in 1..={n}, got {rank}"
        )));
    }
    let eig = sym_eig(y)?;
    let keep = eig.values.iter().take(rank).take_while(|&&v| v > 0.0).count();
    let used = EigenPairs {
        values: eig.values.slice(ndarray::s![..keep]).to_owned(),
        vectors: eig.vectors.slice(ndarray::s![.., ..keep]).to_owned(),
    };
    let s = if keep == 0 {
        Array2::zeros((n, n))
    } else {
        used.reconstruct()
    };
    Ok((s, used))
}
