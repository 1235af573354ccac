use ndarray::{Array2, Axis};

use super::GenClusModel;
use crate::error::{Error, Result};
use crate::graph::NormalizedTensor;

/// `c[k, r] = u_rᵀ Y_k u_r`, restricted to the columns listed in `cols`
/// (other entries are left at zero).
pub(crate) fn column_quadratics_on(y: &NormalizedTensor, u: &Array2<f64>, cols: &[usize]) -> Array2<f64> {
    let mut c = Array2::<f64>::zeros((y.num_views(), u.ncols()));
    if cols.is_empty() {
        return c;
    }
    let sub = u.select(Axis(1), cols);
    for (k, slice) in y.slices().iter().enumerate() {
        let yu = slice.dot(&sub);
        for (j, &r) in cols.iter().enumerate() {
            c[[k, r]] = sub.column(j).dot(&yu.column(j));
        }
    }
    c
}

/// `c[k, r] = u_rᵀ Y_k u_r` for every view and every column of `U`.
pub fn column_quadratics(y: &NormalizedTensor, u: &Array2<f64>) -> Array2<f64> {
    let cols: Vec<usize> = (0..u.ncols()).collect();
    column_quadratics_on(y, u, &cols)
}

/// `(UᵀU) ∘ (UᵀU)`.
pub(crate) fn gram_squared(u: &Array2<f64>) -> Array2<f64> {
    let g = u.t().dot(u);
    &g * &g
}

/// `Σ_k ||Y_k − U diag(w_k) Uᵀ||²` for an arbitrary weight matrix `w`
/// (`K×R`), evaluated through `||Y||² − 2 w·c + wᵀ H w`. `cq` must hold
/// `u_rᵀ Y_k u_r` wherever `w[k, r] != 0`.
pub(crate) fn reconstruction_error_with(
    y: &NormalizedTensor,
    w: &Array2<f64>,
    cq: &Array2<f64>,
    h: &Array2<f64>,
) -> f64 {
    let mut total = 0.0;
    for k in 0..y.num_views() {
        let wk = w.row(k);
        let cross: f64 = wk.iter().zip(cq.row(k)).map(|(a, b)| a * b).sum();
        let quad = wk.dot(&h.dot(&wk));
        total += y.sq_norm(k) - 2.0 * cross + quad;
    }
    total.max(0.0)
}

pub(crate) fn check_shapes(y: &NormalizedTensor, u: &Array2<f64>, a: &Array2<f64>, b: &Array2<f64>) -> Result<()> {
    let (i, r) = u.dim();
    let (k, m) = a.dim();
    if i != y.num_nodes() || k != y.num_views() || b.dim() != (m, r) {
        return Err(Error::Dimension(format!(
            "tensor is {}x{}x{} but U {:?}, A {:?}, B {:?}",
            y.num_nodes(),
            y.num_nodes(),
            y.num_views(),
            u.dim(),
            a.dim(),
            b.dim()
        )));
    }
    Ok(())
}

/// `Σ_k ||Y_k − U diag((AB)_k:) Uᵀ||²` for any factors (no feasibility needed).
pub fn reconstruction_error(y: &NormalizedTensor, u: &Array2<f64>, a: &Array2<f64>, b: &Array2<f64>) -> Result<f64> {
    check_shapes(y, u, a, b)?;
    let w = a.dot(b);
    let used: Vec<usize> = (0..w.ncols())
        .filter(|&r| w.column(r).iter().any(|&v| v != 0.0))
        .collect();
    let cq = column_quadratics_on(y, u, &used);
    Ok(reconstruction_error_with(y, &w, &cq, &gram_squared(u)))
}

/// Squared Frobenius residual of the model.
pub fn objective(y: &NormalizedTensor, model: &GenClusModel) -> Result<f64> {
    reconstruction_error(y, &model.u, &model.a, &model.b)
}
