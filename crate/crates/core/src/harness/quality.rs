use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{preprocess, ExperimentConfig, Method, MethodConfig, Preprocess};
use crate::error::{Error, Result};
use crate::eval::{evaluate, ClusteringResult, PipelineConfig};
use crate::graph::{GroundTruth, MultiViewGraph, NormalizedTensor};
use crate::richcom::{build_b_fixed, richcom_fit_with_checkpoints, richcom_init};
use crate::solver::{fit_with_checkpoints, init_model, ConstraintMode, SolveReport};
use crate::synth::generate;
use crate::util::{derive_seed, median, percentile};

/// One fitted-and-scored configuration on one trial graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub gamma: f64,
    pub trial: usize,
    pub method: String,
    pub variant: String,
    pub config: String,
    pub preprocess: String,
    pub mode: String,
    pub rank: usize,
    pub tol: f64,
    pub rho: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub final_objective: f64,
    pub view_ami: f64,
    pub node_ami: f64,
    pub node_nmi: f64,
    pub node_ari: f64,
    pub pipeline: String,
    pub error: String,
}

impl TrialRow {
    /// Score used for ranking and summaries; failed trials count as 0.
    pub fn node_score(&self) -> f64 {
        if self.node_ami.is_nan() {
            0.0
        } else {
            self.node_ami
        }
    }

    fn view_score(&self) -> f64 {
        if self.view_ami.is_nan() {
            0.0
        } else {
            self.view_ami
        }
    }

    fn group(&self) -> (String, String) {
        (self.method.clone(), self.variant.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub gamma: f64,
    pub method: String,
    pub variant: String,
    pub config: String,
    pub trials: usize,
    pub errors: usize,
    pub node_ami_q25: f64,
    pub node_ami_median: f64,
    pub node_ami_q75: f64,
    pub view_ami_q25: f64,
    pub view_ami_median: f64,
    pub view_ami_q75: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QualityOutcome {
    /// Every configuration on every trial.
    pub all: Vec<TrialRow>,
    /// Rows of the selected configuration per (γ, method, variant).
    pub best: Vec<TrialRow>,
    pub summary: Vec<SummaryRow>,
}

struct Setting<'a> {
    gamma: f64,
    trial: usize,
    method: &'a MethodConfig,
    prep: Preprocess,
    mode: Option<ConstraintMode>,
    rank: usize,
    rho: Option<f64>,
}

impl Setting<'_> {
    fn row(&self, tol: f64) -> TrialRow {
        let mode = self.mode.map(|m| m.label()).unwrap_or_else(|| "-".into());
        let mut config = format!("prep={};mode={};R={};tol={:e}", self.prep.name(), mode, self.rank, tol);
        if let Some(rho) = self.rho {
            config.push_str(&format!(";rho={rho}"));
        }
        TrialRow {
            gamma: self.gamma,
            trial: self.trial,
            method: self.method.method.name().into(),
            variant: self.method.variant.name().into(),
            config,
            preprocess: self.prep.name().into(),
            mode,
            rank: self.rank,
            tol,
            rho: self.rho,
            iterations: 0,
            converged: false,
            final_objective: f64::NAN,
            view_ami: f64::NAN,
            node_ami: f64::NAN,
            node_nmi: f64::NAN,
            node_ari: f64::NAN,
            pipeline: String::new(),
            error: String::new(),
        }
    }

    fn rows(&self, tols: &[f64], outcome: Result<Vec<(SolveReport, Result<ClusteringResult>)>>) -> Vec<TrialRow> {
        match outcome {
            Err(e) => tols
                .iter()
                .map(|&t| TrialRow { error: e.to_string(), ..self.row(t) })
                .collect(),
            Ok(results) => tols
                .iter()
                .zip(results)
                .map(|(&t, (rep, res))| {
                    let mut row = TrialRow {
                        iterations: rep.iterations,
                        converged: rep.converged,
                        final_objective: rep.final_objective(),
                        ..self.row(t)
                    };
                    match res {
                        Ok(r) => {
                            row.view_ami = r.scores["view_ami"];
                            row.node_ami = r.scores["node_ami"];
                            row.node_nmi = r.scores["node_nmi"];
                            row.node_ari = r.scores["node_ari"];
                            row.pipeline = r.pipeline.label();
                        }
                        Err(e) => row.error = e.to_string(),
                    }
                    row
                })
                .collect(),
        }
    }
}

struct TrialContext<'a> {
    cfg: &'a ExperimentConfig,
    gi: usize,
    trial: usize,
    truth: GroundTruth,
    pipeline: PipelineConfig,
    cluster_counts: Vec<usize>,
}

impl TrialContext<'_> {
    fn seed(&self, words: &[u64]) -> u64 {
        let mut w = vec![self.gi as u64, self.trial as u64];
        w.extend_from_slice(words);
        derive_seed(self.cfg.seed, &w)
    }

    fn genclus(&self, y: &NormalizedTensor, setting: &Setting, seed: u64) -> Vec<TrialRow> {
        let cfg = self.cfg;
        let outcome = init_model(y, setting.rank, cfg.clusters, setting.mode.unwrap_or_default(), seed)
            .and_then(|init| fit_with_checkpoints(y, init, &cfg.tols, cfg.max_iters))
            .map(|fits| {
                fits.into_iter()
                    .map(|(m, rep)| {
                        let res = evaluate(&m.u, &m.a, &m.b, &self.truth, &self.pipeline);
                        (rep, res)
                    })
                    .collect()
            });
        setting.rows(&cfg.tols, outcome)
    }

    fn richcom(&self, y: &NormalizedTensor, setting: &Setting, seed: u64) -> Vec<TrialRow> {
        let cfg = self.cfg;
        let rho = setting.rho.unwrap_or(0.0);
        let outcome = build_b_fixed(&self.cluster_counts, cfg.clusters, setting.rank, seed)
            .and_then(|b| richcom_init(y, &b, rho, derive_seed(seed, &[1])))
            .and_then(|init| richcom_fit_with_checkpoints(y, init, &cfg.tols, cfg.max_iters))
            .map(|fits| {
                fits.into_iter()
                    .map(|(m, rep)| {
                        let res = evaluate(&m.u, &m.a, &m.b_fixed, &self.truth, &self.pipeline);
                        (rep, res)
                    })
                    .collect()
            });
        setting.rows(&cfg.tols, outcome)
    }

    fn run(&self, graph: &MultiViewGraph, gamma: f64) -> Vec<TrialRow> {
        let cfg = self.cfg;
        let mut rows = Vec::new();
        for (mi, method) in cfg.methods.iter().enumerate() {
            for (pi, prep) in method.preprocessings().into_iter().enumerate() {
                let base = Setting { gamma, trial: self.trial, method, prep, mode: None, rank: 0, rho: None };
                let y = match preprocess(graph, prep, cfg.teleport) {
                    Ok(y) => y,
                    Err(e) => {
                        let row = TrialRow { error: e.to_string(), ..base.row(f64::NAN) };
                        rows.push(row);
                        continue;
                    }
                };
                for (ri, &rank) in cfg.ranks.iter().enumerate() {
                    match method.method {
                        Method::Genclus => {
                            for (oi, mode) in method.modes().into_iter().enumerate() {
                                let s = Setting { mode: Some(mode), rank, ..base };
                                let seed = self.seed(&[1, mi as u64, pi as u64, ri as u64, oi as u64]);
                                rows.extend(self.genclus(&y, &s, seed));
                            }
                        }
                        Method::RichcomSym => {
                            for (hi, &rho) in cfg.rhos.iter().enumerate() {
                                let s = Setting { rho: Some(rho), rank, ..base };
                                let seed = self.seed(&[1, mi as u64, pi as u64, ri as u64, hi as u64]);
                                rows.extend(self.richcom(&y, &s, seed));
                            }
                        }
                    }
                }
            }
        }
        rows
    }
}

fn run_trial(cfg: &ExperimentConfig, gi: usize, trial: usize) -> Vec<TrialRow> {
    let gamma = cfg.gammas[gi];
    let spec = crate::synth::GeneratorSpec {
        gamma,
        seed: derive_seed(cfg.seed, &[gi as u64, trial as u64, 0]),
        ..cfg.generator.clone()
    };
    let graph = match generate(&spec).and_then(|g| {
        let t = g.truth().ok_or_else(|| Error::InvalidArgument("generated graph lacks truth".into()))?;
        Ok((g, t))
    }) {
        Ok(v) => v,
        Err(e) => {
            return cfg
                .methods
                .iter()
                .map(|m| TrialRow {
                    gamma,
                    trial,
                    method: m.method.name().into(),
                    variant: m.variant.name().into(),
                    config: "-".into(),
                    preprocess: "-".into(),
                    mode: "-".into(),
                    rank: 0,
                    tol: f64::NAN,
                    rho: None,
                    iterations: 0,
                    converged: false,
                    final_objective: f64::NAN,
                    view_ami: f64::NAN,
                    node_ami: f64::NAN,
                    node_nmi: f64::NAN,
                    node_ari: f64::NAN,
                    pipeline: String::new(),
                    error: e.to_string(),
                })
                .collect()
        }
    };
    let (graph, truth) = graph;
    let mut pipeline = PipelineConfig::full_grid(cfg.threshold);
    pipeline.kmeans = cfg.kmeans;
    pipeline.seed = derive_seed(cfg.seed, &[gi as u64, trial as u64, 2]);
    let ctx = TrialContext {
        cfg,
        gi,
        trial,
        truth,
        pipeline,
        cluster_counts: spec.cluster_counts(),
    };
    ctx.run(&graph, gamma)
}

/// Per (γ, method, variant), keeps the configuration with the largest
/// median node AMI over trials (earliest configuration on ties).
pub fn select_best(rows: &[TrialRow]) -> Vec<TrialRow> {
    let mut order: Vec<(u64, (String, String))> = Vec::new();
    let mut groups: BTreeMap<(u64, (String, String)), Vec<&TrialRow>> = BTreeMap::new();
    for r in rows {
        let key = (r.gamma.to_bits(), r.group());
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(r);
    }
    let mut out = Vec::new();
    for key in order {
        let members = &groups[&key];
        let mut configs: Vec<&str> = Vec::new();
        let mut by_config: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
        for r in members {
            if !by_config.contains_key(r.config.as_str()) {
                configs.push(&r.config);
            }
            by_config.entry(&r.config).or_default().push(r.node_score());
        }
        let mut best: Option<(&str, f64)> = None;
        for c in configs {
            let med = percentile(&by_config[c], 50.0);
            if best.is_none_or(|(_, b)| med > b) {
                best = Some((c, med));
            }
        }
        if let Some((c, _)) = best {
            let mut chosen: Vec<TrialRow> = members.iter().filter(|r| r.config == c).map(|r| (*r).clone()).collect();
            chosen.sort_by_key(|r| r.trial);
            out.extend(chosen);
        }
    }
    out
}

/// 25th/50th/75th percentiles of the given rows per (γ, method, variant).
pub fn summarize(rows: &[TrialRow]) -> Vec<SummaryRow> {
    let mut order: Vec<(u64, (String, String))> = Vec::new();
    let mut groups: BTreeMap<(u64, (String, String)), Vec<&TrialRow>> = BTreeMap::new();
    for r in rows {
        let key = (r.gamma.to_bits(), r.group());
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(r);
    }
    order
        .into_iter()
        .map(|key| {
            let g = &groups[&key];
            let node: Vec<f64> = g.iter().map(|r| r.node_score()).collect();
            let view: Vec<f64> = g.iter().map(|r| r.view_score()).collect();
            let mut configs: Vec<&str> = g.iter().map(|r| r.config.as_str()).collect();
            configs.dedup();
            SummaryRow {
                gamma: g[0].gamma,
                method: g[0].method.clone(),
                variant: g[0].variant.clone(),
                config: configs.join("|"),
                trials: g.len(),
                errors: g.iter().filter(|r| !r.error.is_empty()).count(),
                node_ami_q25: percentile(&node, 25.0),
                node_ami_median: median(&node),
                node_ami_q75: percentile(&node, 75.0),
                view_ami_q25: percentile(&view, 25.0),
                view_ami_median: median(&view),
                view_ami_q75: percentile(&view, 75.0),
            }
        })
        .collect()
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
    x: f64,
    median: f64,
    q25: f64,
    q75: f64,
}

impl QualityOutcome {
    /// Writes trial, selected-trial, summary and per-method plot-data CSVs.
    pub fn write(&self, dir: &Path) -> Result<Vec<std::path::PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut paths = vec![
            dir.join("quality_trials_all.csv"),
            dir.join("quality_trials.csv"),
            dir.join("quality_summary.csv"),
        ];
        write_csv(&paths[0], &self.all)?;
        write_csv(&paths[1], &self.best)?;
        write_csv(&paths[2], &self.summary)?;
        let mut labels: Vec<(String, String)> = Vec::new();
        for s in &self.summary {
            let l = (s.method.clone(), s.variant.clone());
            if !labels.contains(&l) {
                labels.push(l);
            }
        }
        for (method, variant) in labels {
            let rows: Vec<PlotRow> = self
                .summary
                .iter()
                .filter(|s| s.method == method && s.variant == variant)
                .map(|s| PlotRow { x: s.gamma, median: s.node_ami_median, q25: s.node_ami_q25, q75: s.node_ami_q75 })
                .collect();
            let p = dir.join(format!("plot_quality_{method}_{variant}.csv"));
            write_csv(&p, &rows)?;
            paths.push(p);
        }
        Ok(paths)
    }
}

/// Runs every (γ, trial) job on a pool of `jobs` workers. Results do not
/// depend on `jobs`.
pub fn bench_quality(cfg: &ExperimentConfig, jobs: usize) -> Result<QualityOutcome> {
    cfg.validate()?;
    let tasks: Vec<(usize, usize)> = (0..cfg.gammas.len())
        .flat_map(|g| (0..cfg.samples).map(move |t| (g, t)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot build worker pool: {e}")))?;
    let per_task: Vec<Vec<TrialRow>> = pool.install(|| tasks.par_iter().map(|&(g, t)| run_trial(cfg, g, t)).collect());
    let all: Vec<TrialRow> = per_task.into_iter().flatten().collect();
    let best = select_best(&all);
    let summary = summarize(&best);
    Ok(QualityOutcome { all, best, summary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{GeneratorSpec, StructureSpec};

    fn row(gamma: f64, trial: usize, config: &str, node: f64) -> TrialRow {
        TrialRow {
            gamma,
            trial,
            method: "genclus".into(),
            variant: "original".into(),
            config: config.into(),
            preprocess: "normalized".into(),
            mode: "-".into(),
            rank: 6,
            tol: 1e-3,
            rho: None,
            iterations: 1,
            converged: true,
            final_objective: 0.0,
            view_ami: 1.0,
            node_ami: node,
            node_nmi: node,
            node_ari: node,
            pipeline: String::new(),
            error: String::new(),
        }
    }

    #[test]
    fn selection_uses_median() {
        let rows = vec![
            row(0.1, 0, "a", 1.0),
            row(0.1, 1, "a", 0.0),
            row(0.1, 2, "a", 0.1),
            row(0.1, 0, "b", 0.5),
            row(0.1, 1, "b", 0.5),
            row(0.1, 2, "b", 0.4),
        ];
        let best = select_best(&rows);
        assert!(best.iter().all(|r| r.config == "b"));
        assert_eq!(best.len(), 3);
        let s = summarize(&best);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].node_ami_median, 0.5);
    }

    #[test]
    fn errors_count_as_zero() {
        let mut bad = row(0.1, 0, "a", f64::NAN);
        bad.error = "boom".into();
        let s = summarize(&[bad, row(0.1, 1, "a", 1.0)]);
        assert_eq!(s[0].errors, 1);
        assert_eq!(s[0].node_ami_median, 0.5);
    }

    fn tiny_config() -> ExperimentConfig {
        ExperimentConfig {
            ranks: vec![4],
            tols: vec![1e-3, 1e-6],
            samples: 2,
            gammas: vec![0.6],
            generator: GeneratorSpec {
                structures: vec![
                    StructureSpec { views: 2, cluster_sizes: vec![10, 10] },
                    StructureSpec { views: 2, cluster_sizes: vec![5, 15] },
                ],
                gamma: 0.6,
                flip_fraction: 0.01,
                directed: true,
                seed: 0,
            },
            clusters: 2,
            rhos: vec![0.0],
            max_iters: 100,
            ..Default::default()
        }
    }

    #[test]
    fn row_count_and_job_independence() {
        let mut cfg = tiny_config();
        cfg.methods.push(MethodConfig { method: Method::RichcomSym, variant: super::super::Variant::Original });
        let serial = bench_quality(&cfg, 1).unwrap();
        let parallel = bench_quality(&cfg, 3).unwrap();
        assert_eq!(serial, parallel);
        assert_eq!(serial.best.len(), cfg.gammas.len() * cfg.samples * cfg.methods.len());
        assert_eq!(serial.all.len(), cfg.samples * 2 * 2);
        assert!(serial.all.iter().all(|r| r.error.is_empty()), "{:?}", serial.all);
    }
}
