use std::time::Instant;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::objective::{check_shapes, column_quadratics_on, gram_squared, reconstruction_error_with};
use super::update::{update_a_with, update_ub};
use super::{init_model, validate_dims, ConstraintMode, GenClusModel};
use crate::error::{Error, Result};
use crate::graph::NormalizedTensor;

const MAX_WARNINGS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub rank: usize,
    pub clusters: usize,
    pub mode: ConstraintMode,
    pub tol: f64,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            rank: 6,
            clusters: 3,
            mode: ConstraintMode::default(),
            tol: 1e-6,
            max_iters: 1000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    /// Objective at the start, then after every half-update.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub tol: f64,
    pub a_update_secs: f64,
    pub ub_update_secs: f64,
    pub objective_secs: f64,
    /// Views assigned to each cluster by the final `A`.
    pub view_sets: Vec<Vec<usize>>,
    pub warnings: Vec<String>,
}

impl SolveReport {
    pub fn final_objective(&self) -> f64 {
        self.objective_trace.last().copied().unwrap_or(f64::NAN)
    }

    /// Largest relative increase between consecutive trace entries.
    pub fn worst_increase(&self) -> f64 {
        self.objective_trace
            .windows(2)
            .map(|w| (w[1] - w[0]) / w[0].abs().max(1.0))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Random initialization followed by block coordinate descent.
pub fn fit(y: &NormalizedTensor, opts: &FitOptions) -> Result<(GenClusModel, SolveReport)> {
    let init = init_model(y, opts.rank, opts.clusters, opts.mode, opts.seed)?;
    fit_from(y, init, opts.tol, opts.max_iters)
}

/// Block coordinate descent from a given feasible model.
pub fn fit_from(
    y: &NormalizedTensor,
    init: GenClusModel,
    tol: f64,
    max_iters: usize,
) -> Result<(GenClusModel, SolveReport)> {
    let mut out = fit_with_checkpoints(y, init, &[tol], max_iters)?;
    Ok(out.pop().expect("one checkpoint per tolerance"))
}

fn finite(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(format!("objective became {v} {what}")))
    }
}

/// Runs one trajectory and returns the state at which each tolerance in
/// `tols` would have stopped, in the same order as `tols`. The trajectory does
/// not depend on the tolerance, so this equals separate runs.
pub fn fit_with_checkpoints(
    y: &NormalizedTensor,
    init: GenClusModel,
    tols: &[f64],
    max_iters: usize,
) -> Result<Vec<(GenClusModel, SolveReport)>> {
    check_shapes(y, &init.u, &init.a, &init.b)?;
    validate_dims(y.num_nodes(), y.num_views(), init.rank(), init.num_clusters())?;
    if tols.is_empty() || tols.iter().any(|t| t.is_nan() || *t <= 0.0) {
        return Err(Error::InvalidArgument(format!("tolerances must be positive, got {tols:?}")));
    }
    let all_cols: Vec<usize> = (0..init.rank()).collect();
    let mut model = init;
    let mut report = SolveReport {
        objective_trace: Vec::new(),
        iterations: 0,
        converged: false,
        tol: f64::NAN,
        a_update_secs: 0.0,
        ub_update_secs: 0.0,
        objective_secs: 0.0,
        view_sets: Vec::new(),
        warnings: Vec::new(),
    };
    let mut results: Vec<Option<(GenClusModel, SolveReport)>> = vec![None; tols.len()];
    let mut pending: Vec<usize> = (0..tols.len()).collect();

    let t = Instant::now();
    let mut cq = column_quadratics_on(y, &model.u, &all_cols);
    let mut h = gram_squared(&model.u);
    let mut prev = finite(
        reconstruction_error_with(y, &model.a.dot(&model.b), &cq, &h),
        "at initialization",
    )?;
    report.objective_secs += t.elapsed().as_secs_f64();
    report.objective_trace.push(prev);

    let snapshot = |model: &GenClusModel, report: &SolveReport, tol: f64, converged: bool| {
        let mut r = report.clone();
        r.tol = tol;
        r.converged = converged;
        r.view_sets = (0..model.num_clusters()).map(|m| model.views_of(m)).collect();
        (model.clone(), r)
    };

    for iter in 1..=max_iters {
        let t = Instant::now();
        let (a, info) = update_a_with(&model, &cq, &h);
        model.a = a;
        report.a_update_secs += t.elapsed().as_secs_f64();
        if !info.degenerate_rows.is_empty() && report.warnings.len() < MAX_WARNINGS {
            let msg = format!(
                "iteration {iter}: every cluster template is zero, rows {:?} of A set to zero",
                info.degenerate_rows
            );
            log::warn!("{msg}");
            report.warnings.push(msg);
        }

        let t = Instant::now();
        let mid = finite(
            reconstruction_error_with(y, &model.a.dot(&model.b), &cq, &h),
            "after the A update",
        )?;
        report.objective_secs += t.elapsed().as_secs_f64();
        report.objective_trace.push(mid);

        let t = Instant::now();
        let up = update_ub(y, &model)?;
        model.u = up.u;
        model.b = up.b;
        model.partition = up.partition;
        report.ub_update_secs += t.elapsed().as_secs_f64();

        let t = Instant::now();
        cq = column_quadratics_on(y, &model.u, &all_cols);
        h = gram_squared(&model.u);
        let cur = finite(
            reconstruction_error_with(y, &model.a.dot(&model.b), &cq, &h),
            "after the U/B update",
        )?;
        report.objective_secs += t.elapsed().as_secs_f64();
        report.objective_trace.push(cur);
        report.iterations = iter;

        let rel = if prev == cur { 0.0 } else { (prev - cur).abs() / prev.abs().max(f64::MIN_POSITIVE) };
        prev = cur;
        pending.retain(|&i| {
            if rel < tols[i] {
                results[i] = Some(snapshot(&model, &report, tols[i], true));
                false
            } else {
                true
            }
        });
        if pending.is_empty() {
            break;
        }
    }
    for i in pending {
        results[i] = Some(snapshot(&model, &report, tols[i], false));
    }
    Ok(results.into_iter().map(|r| r.expect("every tolerance resolved")).collect())
}

/// Ground-truth-shaped model used as a reference point in tests and
/// diagnostics: `U` columns for every cluster, `A` the indicator of each
/// view's label and `B` all ones.
pub fn indicator_model(u: Array2<f64>, partition: Vec<Option<usize>>, labels: &[usize], clusters: usize, mode: ConstraintMode) -> GenClusModel {
    let mut a = Array2::<f64>::zeros((labels.len(), clusters));
    for (k, &m) in labels.iter().enumerate() {
        a[[k, m]] = 1.0;
    }
    let mut b = Array2::<f64>::zeros((clusters, u.ncols()));
    for (r, o) in partition.iter().enumerate() {
        if let Some(m) = o {
            b[[*m, r]] = 1.0;
        }
    }
    GenClusModel { u, a, b, mode, partition }
}
