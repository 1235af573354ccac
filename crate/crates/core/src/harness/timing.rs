use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{preprocess, ExperimentConfig, Method, Preprocess};
use crate::error::{Error, Result};
use crate::richcom::{build_b_fixed, richcom_fit_from, richcom_init};
use crate::solver::{fit_from, init_model, ConstraintMode};
use crate::synth::{generate, scaled_paper_spec};
use crate::util::{derive_seed, percentile};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub dim: String,
    pub value: usize,
    pub method: String,
    pub trial: usize,
    pub seconds: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingMedian {
    pub dim: String,
    pub value: usize,
    pub method: String,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
    pub median_per_iteration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingSlope {
    pub dim: String,
    pub method: String,
    /// Least-squares slope of log(median seconds) against log(value).
    pub slope: f64,
    /// Same for the median time per iteration.
    pub slope_per_iteration: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingOutcome {
    pub rows: Vec<TimingRow>,
    pub medians: Vec<TimingMedian>,
    pub slopes: Vec<TimingSlope>,
}

/// Least-squares slope of `ln y` on `ln x`; NaN with fewer than two points.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// `(nodes, views, rank, clusters)` with `dim` set to `value` and the other
/// sizes at their defaults for that sweep.
fn sizes(dim: &str, value: usize) -> Result<(usize, usize, usize, usize)> {
    Ok(match dim {
        "nodes" => (value, 9, 3, 3),
        "views" => (60, value, 3, 3),
        "rank" => (240, 9, value, 3),
        "clusters" => (120, 9, 96, value),
        other => return Err(Error::InvalidArgument(format!("unknown timing dimension {other:?}"))),
    })
}

fn time_one(cfg: &ExperimentConfig, method: Method, dim: &str, value: usize, trial: usize, seed: u64) -> Result<TimingRow> {
    let t = &cfg.timing;
    let (nodes, views, rank, clusters) = sizes(dim, value)?;
    let spec = scaled_paper_spec(nodes, views, t.gamma)?.with_seed(derive_seed(seed, &[0]));
    let graph = generate(&spec)?;
    let y = preprocess(&graph, Preprocess::Normalized, cfg.teleport)?;
    let (seconds, iterations) = match method {
        Method::Genclus => {
            let init = init_model(&y, rank, clusters, ConstraintMode::default(), derive_seed(seed, &[1]))?;
            let start = Instant::now();
            let (_, rep) = fit_from(&y, init, t.tol, cfg.max_iters)?;
            (start.elapsed().as_secs_f64(), rep.iterations)
        }
        Method::RichcomSym => {
            let b = build_b_fixed(&spec.cluster_counts(), clusters, rank, derive_seed(seed, &[2]))?;
            let init = richcom_init(&y, &b, 0.0, derive_seed(seed, &[1]))?;
            let start = Instant::now();
            let (_, rep) = richcom_fit_from(&y, init, t.tol, cfg.max_iters)?;
            (start.elapsed().as_secs_f64(), rep.iterations)
        }
    };
    Ok(TimingRow {
        dim: dim.to_string(),
        value,
        method: method.name().to_string(),
        trial,
        seconds,
        iterations,
    })
}

/// Serial timing sweeps. Only the fit call is timed; generation and
/// normalization happen outside the measured region.
pub fn bench_time(cfg: &ExperimentConfig) -> Result<TimingOutcome> {
    let t = &cfg.timing;
    let mut rows = Vec::new();
    let mut medians = Vec::new();
    let mut slopes = Vec::new();
    for (di, dim) in t.dims.iter().enumerate() {
        let grid = match dim.as_str() {
            "nodes" => &t.nodes_grid,
            "views" => &t.views_grid,
            "rank" => &t.rank_grid,
            "clusters" => &t.clusters_grid,
            other => return Err(Error::InvalidArgument(format!("unknown timing dimension {other:?}"))),
        };
        for &method in &t.methods {
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            let mut ys_iter = Vec::new();
            for (vi, &value) in grid.iter().enumerate() {
                let mut secs = Vec::new();
                let mut per_iter = Vec::new();
                for trial in 0..t.samples {
                    let seed = derive_seed(cfg.seed, &[di as u64, vi as u64, trial as u64]);
                    let row = time_one(cfg, method, dim, value, trial, seed)?;
                    secs.push(row.seconds);
                    per_iter.push(row.seconds / row.iterations.max(1) as f64);
                    rows.push(row);
                }
                let med = TimingMedian {
                    dim: dim.clone(),
                    value,
                    method: method.name().to_string(),
                    median: percentile(&secs, 50.0),
                    q25: percentile(&secs, 25.0),
                    q75: percentile(&secs, 75.0),
                    median_per_iteration: percentile(&per_iter, 50.0),
                };
                xs.push(value as f64);
                ys.push(med.median);
                ys_iter.push(med.median_per_iteration);
                medians.push(med);
            }
            slopes.push(TimingSlope {
                dim: dim.clone(),
                method: method.name().to_string(),
                slope: log_log_slope(&xs, &ys),
                slope_per_iteration: log_log_slope(&xs, &ys_iter),
            });
        }
    }
    Ok(TimingOutcome { rows, medians, slopes })
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct PlotRow {
    x: usize,
    median: f64,
    q25: f64,
    q75: f64,
}

impl TimingOutcome {
    pub fn write(&self, dir: &Path) -> Result<Vec<std::path::PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut paths = vec![dir.join("timing_trials.csv"), dir.join("timing_medians.csv"), dir.join("timing_slopes.csv")];
        write_csv(&paths[0], &self.rows)?;
        write_csv(&paths[1], &self.medians)?;
        write_csv(&paths[2], &self.slopes)?;
        for s in &self.slopes {
            let rows: Vec<PlotRow> = self
                .medians
                .iter()
                .filter(|m| m.dim == s.dim && m.method == s.method)
                .map(|m| PlotRow { x: m.value, median: m.median, q25: m.q25, q75: m.q75 })
                .collect();
            let p = dir.join(format!("plot_time_{}_{}.csv", s.method, s.dim));
            write_csv(&p, &rows)?;
            paths.push(p);
        }
        Ok(paths)
    }
}
