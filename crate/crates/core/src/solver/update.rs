use ndarray::{Array1, Array2};

use super::objective::{check_shapes, gram_squared};
use super::{column_quadratics, ConstraintKind, GenClusModel};
use crate::error::Result;
use crate::graph::NormalizedTensor;
use crate::linalg::{global_top_r_selection, sym_eig, EigenPairs, Ranking};

/// Result of the joint `U`/`B` step.
#[derive(Debug, Clone, PartialEq)]
pub struct UbUpdate {
    pub u: Array2<f64>,
    pub b: Array2<f64>,
    pub partition: Vec<Option<usize>>,
}

/// Rows of `A` whose every candidate `Q^(m)` was zero.
#[derive(Debug, Clone, Default)]
pub(crate) struct AStepInfo {
    pub degenerate_rows: Vec<usize>,
}

/// Row-wise optimal `A` for fixed `U`, `B`, using precomputed
/// `c[k, r] = u_rᵀ Y_k u_r` and `h = (UᵀU)∘(UᵀU)`.
pub(crate) fn update_a_with(
    model: &GenClusModel,
    cq: &Array2<f64>,
    h: &Array2<f64>,
) -> (Array2<f64>, AStepInfo) {
    let (k, m) = model.a.dim();
    // <Y_k, Q^(m)> and ||Q^(m)||^2
    let p = cq.dot(&model.b.t());
    let q: Array1<f64> = (0..m)
        .map(|c| {
            let row = model.b.row(c);
            row.dot(&h.dot(&row))
        })
        .collect();
    let mut a = Array2::<f64>::zeros((k, m));
    let mut info = AStepInfo::default();
    for row in 0..k {
        if q.iter().all(|&v| v <= 0.0) {
            info.degenerate_rows.push(row);
            continue;
        }
        match model.mode.a {
            ConstraintKind::AllOnes => {
                // ||Y - Q||^2 = ||Y||^2 - 2p + q; an all-zero Q gives cost 0.
                let mut best = 0;
                let mut best_cost = f64::INFINITY;
                for c in 0..m {
                    let cost = q[c] - 2.0 * p[[row, c]];
                    if cost < best_cost {
                        best_cost = cost;
                        best = c;
                    }
                }
                a[[row, best]] = 1.0;
            }
            ConstraintKind::Unconstrained | ConstraintKind::NonNegative => {
                let nonneg = model.mode.a == ConstraintKind::NonNegative;
                let mut best: Option<(usize, f64)> = None;
                for c in 0..m {
                    if q[c] <= 0.0 {
                        continue;
                    }
                    let corr = if nonneg { p[[row, c]] } else { p[[row, c]].abs() };
                    let score = corr / q[c].sqrt();
                    if best.is_none_or(|(_, s)| score > s) {
                        best = Some((c, score));
                    }
                }
                if let Some((c, _)) = best {
                    let value = p[[row, c]] / q[c];
                    a[[row, c]] = if nonneg { value.max(0.0) } else { value };
                }
            }
        }
    }
    (a, info)
}

/// Optimal `A` for the model's current `U` and `B`.
pub fn update_a(y: &NormalizedTensor, model: &GenClusModel) -> Result<Array2<f64>> {
    check_shapes(y, &model.u, &model.a, &model.b)?;
    let cq = column_quadratics(y, &model.u);
    let (a, info) = update_a_with(model, &cq, &gram_squared(&model.u));
    for row in info.degenerate_rows {
        log::warn!("every cluster template is zero; row {row} of A set to zero");
    }
    Ok(a)
}

/// Optimal `U`, `B` and column partition for the model's current `A`.
///
/// With all-ones `B`, a cluster without views offers `I` zero-valued
/// candidates, so columns that would otherwise take negative eigenvalues
/// are parked there at no cost. The parked columns are standard basis
/// vectors with unit `B` entries.
pub fn update_ub(y: &NormalizedTensor, model: &GenClusModel) -> Result<UbUpdate> {
    check_shapes(y, &model.u, &model.a, &model.b)?;
    let n = y.num_nodes();
    let (_, clusters) = model.a.dim();
    let rank = model.rank();
    if model.a.iter().all(|&v| v == 0.0) {
        return Ok(UbUpdate {
            u: model.u.clone(),
            b: model.b.clone(),
            partition: model.partition.clone(),
        });
    }
    let b_mode = model.mode.b;
    let ranking = b_mode.ranking();

    let mut eigs: Vec<Option<EigenPairs>> = Vec::with_capacity(clusters);
    let mut norms = vec![0.0; clusters];
    for m in 0..clusters {
        let col = model.a.column(m);
        let norm2: f64 = col.iter().map(|v| v * v).sum();
        norms[m] = norm2.sqrt();
        if norm2 == 0.0 {
            eigs.push(None);
            continue;
        }
        let mut z = Array2::<f64>::zeros((n, n));
        for (k, &w) in col.iter().enumerate() {
            if w != 0.0 {
                z.scaled_add(w, y.slice(k));
            }
        }
        if b_mode == ConstraintKind::AllOnes {
            z.mapv_inplace(|v| 2.0 * v);
            for i in 0..n {
                z[[i, i]] -= norm2;
            }
        } else {
            z.mapv_inplace(|v| v / norms[m]);
        }
        eigs.push(Some(sym_eig(&z)?));
    }

    let pools: Vec<Vec<f64>> = eigs
        .iter()
        .map(|e| match e {
            Some(e) => e.values.to_vec(),
            None if ranking == Ranking::Value => vec![0.0; n],
            None => Vec::new(),
        })
        .collect();
    let sel = global_top_r_selection(&pools, rank, ranking);

    let mut u = Array2::<f64>::zeros((n, rank));
    let mut b = Array2::<f64>::zeros((clusters, rank));
    let mut partition = vec![None; rank];
    let mut col = 0;
    for m in 0..clusters {
        for &idx in &sel.indices[m] {
            match &eigs[m] {
                Some(e) => {
                    u.column_mut(col).assign(&e.vectors.column(idx));
                    b[[m, col]] = match b_mode {
                        ConstraintKind::AllOnes => 1.0,
                        _ => e.values[idx] / norms[m],
                    };
                }
                None => {
                    u[[idx, col]] = 1.0;
                    b[[m, col]] = 1.0;
                }
            }
            partition[col] = Some(m);
            col += 1;
        }
    }
    Ok(UbUpdate { u, b, partition })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::NormalizationKind;
    use crate::solver::{init_model, objective, ConstraintMode};
    use ndarray::array;

    fn two_cluster_model(mode: ConstraintMode) -> GenClusModel {
        GenClusModel {
            u: Array2::eye(2),
            a: array![[1.0, 0.0]],
            b: Array2::eye(2),
            mode,
            partition: vec![Some(0), Some(1)],
        }
    }

    fn single(slice: Array2<f64>) -> NormalizedTensor {
        NormalizedTensor::new(vec![slice], NormalizationKind::Raw).unwrap()
    }

    #[test]
    fn a_step_examples() {
        use ConstraintKind::*;
        let pos = single(array![[1.0, 0.0], [0.0, 0.0]]);
        let neg = single(array![[-1.0, 0.0], [0.0, 0.0]]);
        let m = two_cluster_model(ConstraintMode::new(AllOnes, AllOnes));
        assert_eq!(update_a(&pos, &m).unwrap(), array![[1.0, 0.0]]);
        let m = two_cluster_model(ConstraintMode::new(NonNegative, AllOnes));
        assert_eq!(update_a(&neg, &m).unwrap(), array![[0.0, 0.0]]);
        let m = two_cluster_model(ConstraintMode::new(Unconstrained, AllOnes));
        assert_eq!(update_a(&neg, &m).unwrap(), array![[-1.0, 0.0]]);
    }

    #[test]
    fn a_step_all_zero_templates() {
        let y = single(array![[1.0, 0.0], [0.0, 1.0]]);
        let mut m = two_cluster_model(ConstraintMode::default());
        m.b.fill(0.0);
        assert_eq!(update_a(&y, &m).unwrap(), array![[0.0, 0.0]]);
    }

    #[test]
    fn ub_step_single_view_all_ones() {
        let y = single(array![[0.9, 0.1, 0.0], [0.1, 0.5, 0.0], [0.0, 0.0, -0.3]]);
        let mut m = init_model(&y, 2, 1, ConstraintMode::new(ConstraintKind::AllOnes, ConstraintKind::AllOnes), 1).unwrap();
        m.a = array![[1.0]];
        let up = update_ub(&y, &m).unwrap();
        let eig = sym_eig(y.slice(0)).unwrap();
        for c in 0..2 {
            let dot = up.u.column(c).dot(&eig.vectors.column(c)).abs();
            assert!((dot - 1.0).abs() < 1e-10);
        }
        assert_eq!(up.b, array![[1.0, 1.0]]);
    }

    #[test]
    fn ub_step_pools_spectra() {
        // Z^(1) = diag(0.9, 0.5), Z^(2) = diag(0.8, 0.1) with unit A columns.
        let y = NormalizedTensor::new(
            vec![array![[0.9, 0.0], [0.0, 0.5]], array![[0.8, 0.0], [0.0, 0.1]]],
            NormalizationKind::Raw,
        )
        .unwrap();
        let mut m = init_model(&y, 2, 2, ConstraintMode::new(ConstraintKind::AllOnes, ConstraintKind::Unconstrained), 0).unwrap();
        m.a = array![[1.0, 0.0], [0.0, 1.0]];
        let up = update_ub(&y, &m).unwrap();
        assert_eq!(up.partition, vec![Some(0), Some(1)]);
        assert!((up.b[[0, 0]] - 0.9).abs() < 1e-12);
        assert!((up.b[[1, 1]] - 0.8).abs() < 1e-12);
        assert!((up.u[[0, 0]].abs() - 1.0).abs() < 1e-12);
        assert!((up.u[[0, 1]].abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ub_step_parks_on_empty_cluster() {
        // Negative spectrum, all-ones B: columns go to the idle cluster.
        let y = single(array![[-0.5, 0.0], [0.0, -0.2]]);
        let mut m = init_model(&y, 2, 2, ConstraintMode::new(ConstraintKind::AllOnes, ConstraintKind::AllOnes), 0).unwrap();
        m.a = array![[1.0, 0.0]];
        let before = objective(&y, &GenClusModel { u: m.u.clone(), b: m.b.clone(), ..m.clone() }).unwrap();
        let up = update_ub(&y, &m).unwrap();
        let next = GenClusModel { u: up.u, b: up.b, partition: up.partition, ..m };
        assert_eq!(next.partition, vec![Some(1), Some(1)]);
        next.check_feasible(1e-12).unwrap();
        let after = objective(&y, &next).unwrap();
        assert!(after <= before + 1e-12);
        assert!((after - y.total_sq_norm()).abs() < 1e-12);
    }

    #[test]
    fn ub_step_empty_cluster_gets_nothing_when_clipped() {
        let y = single(array![[0.7, 0.0], [0.0, 0.3]]);
        let mut m = init_model(&y, 2, 2, ConstraintMode::default(), 0).unwrap();
        m.a = array![[0.0, 2.0]];
        let up = update_ub(&y, &m).unwrap();
        assert_eq!(up.partition, vec![Some(1), Some(1)]);
        assert!((up.b[[1, 0]] - 0.35).abs() < 1e-12);
        assert!(up.b.row(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn ub_step_zero_a_is_noop() {
        let y = single(array![[0.7, 0.0], [0.0, 0.3]]);
        let mut m = init_model(&y, 2, 2, ConstraintMode::default(), 0).unwrap();
        m.a.fill(0.0);
        let up = update_ub(&y, &m).unwrap();
        assert_eq!(up.u, m.u);
        assert_eq!(up.b, m.b);
    }
}
