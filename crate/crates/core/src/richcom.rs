//! Symmetric Richcom: `X_k ≈ U diag((A B)_k:) Uᵀ` with non-negative `U`, `A`,
//! an ℓ1 penalty `ρ (Σ U + Σ A)` and a fixed binary `B`, fitted by
//! multiplicative updates.

use std::time::Instant;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::NormalizedTensor;
use crate::solver::{column_quadratics, reconstruction_error, ModelFile, SolveReport};
use crate::util::{derive_seed, rng_from_seed};

pub const EPS: f64 = 1e-12;
const DIVERGENCE_FACTOR: f64 = 1e3;

#[derive(Debug, Clone, PartialEq)]
pub struct RichcomModel {
    pub u: Array2<f64>,
    pub a: Array2<f64>,
    pub b_fixed: Array2<f64>,
    pub rho: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RichcomOptions {
    pub rho: f64,
    pub tol: f64,
    pub max_iters: usize,
    pub seed: u64,
    /// Independent random starts; the fit with the lowest final objective
    /// is kept. Restart 0 uses `seed` itself.
    #[serde(default = "one")]
    pub restarts: usize,
}

fn one() -> usize {
    1
}

impl Default for RichcomOptions {
    fn default() -> Self {
        Self {
            rho: 0.0,
            tol: 1e-6,
            max_iters: 1000,
            seed: 0,
            restarts: 1,
        }
    }
}

impl RichcomModel {
    /// Owner of each column of `U` according to `B_fixed`.
    pub fn partition(&self) -> Vec<Option<usize>> {
        (0..self.b_fixed.ncols())
            .map(|r| (0..self.b_fixed.nrows()).find(|&m| self.b_fixed[[m, r]] != 0.0))
            .collect()
    }

    pub fn to_file(&self) -> ModelFile {
        let mut f = ModelFile::from_factors("richcom_sym", &self.u, &self.a, &self.b_fixed, self.partition());
        f.rho = Some(self.rho);
        f
    }

    pub fn from_file(f: &ModelFile) -> Result<Self> {
        Ok(Self {
            u: f.u()?,
            a: f.a()?,
            b_fixed: f.b()?,
            rho: f.rho.unwrap_or(0.0),
        })
    }
}

/// Fixed `B` shaped after the ground truth: structure `m` owns one column per
/// node cluster in `clusters_per_structure[m]`. Surplus rows are zero and
/// surplus columns are random indicators; missing rows or columns are
/// dropped at random.
pub fn build_b_fixed(clusters_per_structure: &[usize], m: usize, r: usize, seed: u64) -> Result<Array2<f64>> {
    if m == 0 || r == 0 {
        return Err(Error::InvalidArgument("B needs at least one row and one column".into()));
    }
    let mut rng = rng_from_seed(seed);
    let gt_rows = clusters_per_structure.len();
    let gt_cols: usize = clusters_per_structure.iter().sum();
    let mut core = Array2::<f64>::zeros((gt_rows, gt_cols));
    let mut c = 0;
    for (row, &n) in clusters_per_structure.iter().enumerate() {
        for _ in 0..n {
            core[[row, c]] = 1.0;
            c += 1;
        }
    }
    let mut rows: Vec<usize> = (0..gt_rows).collect();
    if m < gt_rows {
        rows.shuffle(&mut rng);
        rows.truncate(m);
        rows.sort_unstable();
    }
    let mut cols: Vec<usize> = (0..gt_cols).collect();
    if r < gt_cols {
        cols.shuffle(&mut rng);
        cols.truncate(r);
        cols.sort_unstable();
    }
    let mut b = Array2::<f64>::zeros((m, r));
    for (i, &src_r) in rows.iter().enumerate() {
        for (j, &src_c) in cols.iter().enumerate() {
            b[[i, j]] = core[[src_r, src_c]];
        }
    }
    for j in cols.len()..r {
        b[[rng.random_range(0..m), j]] = 1.0;
    }
    Ok(b)
}

fn clamp_tensor(y: &NormalizedTensor) -> Result<NormalizedTensor> {
    let slices = y.slices().iter().map(|s| s.mapv(|v| v.max(0.0))).collect();
    NormalizedTensor::new(slices, y.kind())
}

/// Penalized objective on the non-negative part of `y`.
pub fn richcom_objective(y: &NormalizedTensor, model: &RichcomModel) -> Result<f64> {
    let x = clamp_tensor(y)?;
    penalized(&x, model)
}

fn penalized(x: &NormalizedTensor, model: &RichcomModel) -> Result<f64> {
    let fit = reconstruction_error(x, &model.u, &model.a, &model.b_fixed)?;
    Ok(fit + model.rho * (model.u.sum() + model.a.sum()))
}

fn update_u(x: &NormalizedTensor, model: &mut RichcomModel) {
    let w = model.a.dot(&model.b_fixed);
    let (n, r) = model.u.dim();
    let mut num = Array2::<f64>::zeros((n, r));
    for (k, slice) in x.slices().iter().enumerate() {
        let xu = slice.dot(&model.u);
        num.scaled_add(1.0, &(&xu * &w.row(k)));
    }
    let ctc = &w.t().dot(&w) * &model.u.t().dot(&model.u);
    let den = model.u.dot(&ctc);
    let shift = model.rho / 2.0 + EPS;
    ndarray::Zip::from(&mut model.u)
        .and(&num)
        .and(&den)
        .for_each(|u, &p, &q| *u *= p / (q + shift));
}

fn update_a(x: &NormalizedTensor, model: &mut RichcomModel) {
    let cq = column_quadratics(x, &model.u);
    let num = cq.dot(&model.b_fixed.t());
    let g = model.u.t().dot(&model.u);
    let hht = model.b_fixed.dot(&(&g * &g)).dot(&model.b_fixed.t());
    let den = model.a.dot(&hht);
    let shift = model.rho / 2.0 + EPS;
    ndarray::Zip::from(&mut model.a)
        .and(&num)
        .and(&den)
        .for_each(|a, &p, &q| *a *= p / (q + shift));
}

/// One multiplicative sweep (`U`, then `A`) on the non-negative part of `y`.
pub fn richcom_sweep(y: &NormalizedTensor, model: &RichcomModel) -> Result<RichcomModel> {
    let x = clamp_tensor(y)?;
    let mut next = model.clone();
    update_u(&x, &mut next);
    update_a(&x, &mut next);
    Ok(next)
}

fn check_inputs(y: &NormalizedTensor, b_fixed: &Array2<f64>, rho: f64) -> Result<()> {
    if y.num_nodes() == 0 || y.num_views() == 0 {
        return Err(Error::Dimension("empty tensor".into()));
    }
    if b_fixed.nrows() == 0 || b_fixed.ncols() == 0 {
        return Err(Error::Dimension("B must be non-empty".into()));
    }
    if b_fixed.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::InvalidArgument("B must be binary".into()));
    }
    for r in 0..b_fixed.ncols() {
        if b_fixed.column(r).sum() > 1.0 {
            return Err(Error::InvalidArgument(format!("column {r} of B is owned by several clusters")));
        }
    }
    if !(rho >= 0.0 && rho.is_finite()) {
        return Err(Error::InvalidArgument(format!("rho must be finite and non-negative, got {rho}")));
    }
    Ok(())
}

/// Random non-negative starting point.
pub fn richcom_init(y: &NormalizedTensor, b_fixed: &Array2<f64>, rho: f64, seed: u64) -> Result<RichcomModel> {
    check_inputs(y, b_fixed, rho)?;
    let mut rng = rng_from_seed(seed);
    let u = Array2::from_shape_fn((y.num_nodes(), b_fixed.ncols()), |_| rng.random::<f64>());
    let a = Array2::from_shape_fn((y.num_views(), b_fixed.nrows()), |_| rng.random::<f64>());
    Ok(RichcomModel {
        u,
        a,
        b_fixed: b_fixed.clone(),
        rho,
    })
}

pub fn richcom_fit(
    y: &NormalizedTensor,
    b_fixed: &Array2<f64>,
    opts: &RichcomOptions,
) -> Result<(RichcomModel, SolveReport)> {
    if opts.restarts == 0 {
        return Err(Error::InvalidArgument("restarts must be at least 1".into()));
    }
    let runs: Vec<Result<(RichcomModel, SolveReport)>> = (0..opts.restarts)
        .into_par_iter()
        .map(|i| {
            let seed = if i == 0 { opts.seed } else { derive_seed(opts.seed, &[i as u64]) };
            let init = richcom_init(y, b_fixed, opts.rho, seed)?;
            richcom_fit_from(y, init, opts.tol, opts.max_iters)
        })
        .collect();
    let mut best: Option<(usize, (RichcomModel, SolveReport))> = None;
    let mut first_err = None;
    for (i, run) in runs.into_iter().enumerate() {
        match run {
            Ok(fit) => {
                if best.as_ref().is_none_or(|(_, b)| fit.1.final_objective() < b.1.final_objective()) {
                    best = Some((i, fit));
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    match best {
        Some((i, (model, mut report))) => {
            if opts.restarts > 1 {
                report.warnings.push(format!("kept restart {i} of {}", opts.restarts));
            }
            Ok((model, report))
        }
        None => Err(first_err.expect("at least one restart ran")),
    }
}

pub fn richcom_fit_from(
    y: &NormalizedTensor,
    init: RichcomModel,
    tol: f64,
    max_iters: usize,
) -> Result<(RichcomModel, SolveReport)> {
    let mut out = richcom_fit_with_checkpoints(y, init, &[tol], max_iters)?;
    Ok(out.pop().expect("one checkpoint per tolerance"))
}

fn view_sets(a: &Array2<f64>) -> Vec<Vec<usize>> {
    let m = a.ncols();
    let mut sets = vec![Vec::new(); m];
    for k in 0..a.nrows() {
        let row = a.row(k);
        if row.iter().any(|&v| v != 0.0) {
            let best = (0..m).fold(0, |b, c| if row[c].abs() > row[b].abs() { c } else { b });
            sets[best].push(k);
        }
    }
    sets
}

/// One trajectory, snapshotted where each tolerance in `tols` would stop;
/// results follow the order of `tols`.
pub fn richcom_fit_with_checkpoints(
    y: &NormalizedTensor,
    init: RichcomModel,
    tols: &[f64],
    max_iters: usize,
) -> Result<Vec<(RichcomModel, SolveReport)>> {
    check_inputs(y, &init.b_fixed, init.rho)?;
    if tols.is_empty() || tols.iter().any(|t| t.is_nan() || *t <= 0.0) {
        return Err(Error::InvalidArgument(format!("tolerances must be positive, got {tols:?}")));
    }
    let x = clamp_tensor(y)?;
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
    let initial = penalized(&x, &model)?;
    report.objective_trace.push(initial);
    let mut prev = initial;
    let mut results: Vec<Option<(RichcomModel, SolveReport)>> = vec![None; tols.len()];
    let mut pending: Vec<usize> = (0..tols.len()).collect();
    let snapshot = |model: &RichcomModel, report: &SolveReport, tol: f64, converged: bool| {
        let mut r = report.clone();
        r.tol = tol;
        r.converged = converged;
        r.view_sets = view_sets(&model.a);
        (model.clone(), r)
    };
    for iter in 1..=max_iters {
        let t = Instant::now();
        update_u(&x, &mut model);
        report.ub_update_secs += t.elapsed().as_secs_f64();
        let t = Instant::now();
        update_a(&x, &mut model);
        report.a_update_secs += t.elapsed().as_secs_f64();
        let t = Instant::now();
        let cur = penalized(&x, &model)?;
        report.objective_secs += t.elapsed().as_secs_f64();
        report.objective_trace.push(cur);
        report.iterations = iter;
        if !cur.is_finite() {
            return Err(Error::NonFinite(format!("objective became {cur} at sweep {iter}")));
        }
        if cur > DIVERGENCE_FACTOR * initial.max(f64::MIN_POSITIVE) {
            return Err(Error::Diverged(format!(
                "objective {cur} exceeds {DIVERGENCE_FACTOR} x initial {initial} at sweep {iter}"
            )));
        }
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
