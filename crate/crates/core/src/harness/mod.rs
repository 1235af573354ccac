//! Experiment configuration and the clustering-quality and timing suites.

mod quality;
mod timing;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{KMeansOptions, DEFAULT_THRESHOLD};
use crate::graph::{directed_normalize, raw_symmetrized, symmetric_normalize, MultiViewGraph, NormalizedTensor, DEFAULT_TELEPORT};
use crate::solver::ConstraintMode;
use crate::synth::{default_paper_spec, GeneratorSpec, GAMMA_GRID};

pub use quality::{bench_quality, select_best, summarize, QualityOutcome, SummaryRow, TrialRow};
pub use timing::{bench_time, log_log_slope, TimingOutcome, TimingRow, TimingSlope};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Genclus,
    RichcomSym,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Genclus => "genclus",
            Method::RichcomSym => "richcom_sym",
        }
    }
}

/// `Original` fixes the preprocessing (and, for GenClus, the constraint
/// mode); `Enhanced` also searches over them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Original,
    Enhanced,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Original => "original",
            Variant::Enhanced => "enhanced",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preprocess {
    Raw,
    Normalized,
}

impl Preprocess {
    pub fn name(self) -> &'static str {
        match self {
            Preprocess::Raw => "raw",
            Preprocess::Normalized => "normalized",
        }
    }
}

/// Normalized affinity for symmetric graphs, the teleporting random-walk
/// version for directed ones; `Raw` only symmetrizes.
pub fn preprocess(graph: &MultiViewGraph, how: Preprocess, teleport: f64) -> Result<NormalizedTensor> {
    match how {
        Preprocess::Raw => raw_symmetrized(graph),
        Preprocess::Normalized if graph.is_symmetric() => symmetric_normalize(graph),
        Preprocess::Normalized => directed_normalize(graph, teleport),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MethodConfig {
    pub method: Method,
    pub variant: Variant,
}

impl MethodConfig {
    pub fn label(&self) -> String {
        format!("{}_{}", self.method.name(), self.variant.name())
    }

    /// Preprocessing options searched by this configuration.
    pub fn preprocessings(&self) -> Vec<Preprocess> {
        match (self.method, self.variant) {
            (_, Variant::Enhanced) => vec![Preprocess::Raw, Preprocess::Normalized],
            (Method::Genclus, Variant::Original) => vec![Preprocess::Normalized],
            (Method::RichcomSym, Variant::Original) => vec![Preprocess::Raw],
        }
    }

    pub fn modes(&self) -> Vec<ConstraintMode> {
        match self.variant {
            Variant::Original => vec![ConstraintMode::default()],
            Variant::Enhanced => ConstraintMode::all(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TimingConfig {
    /// Dimensions to vary, any of `nodes`, `views`, `rank`, `clusters`.
    pub dims: Vec<String>,
    pub nodes_grid: Vec<usize>,
    pub views_grid: Vec<usize>,
    pub rank_grid: Vec<usize>,
    pub clusters_grid: Vec<usize>,
    pub samples: usize,
    pub tol: f64,
    pub gamma: f64,
    pub methods: Vec<Method>,
}

impl Default for TimingConfig {
    fn default() -> Self {
        Self {
            dims: vec!["nodes".into(), "views".into()],
            nodes_grid: vec![60, 120, 240, 480],
            views_grid: vec![576, 1152, 2304, 4608, 9216],
            rank_grid: vec![3, 6, 12, 24, 48],
            clusters_grid: vec![3, 6, 12, 24],
            samples: 5,
            tol: 1e-6,
            gamma: 0.15,
            methods: vec![Method::Genclus],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub methods: Vec<MethodConfig>,
    pub ranks: Vec<usize>,
    pub clusters: usize,
    pub tols: Vec<f64>,
    pub max_iters: usize,
    pub samples: usize,
    pub seed: u64,
    pub gammas: Vec<f64>,
    /// Layout of the synthetic graphs; `gamma` and `seed` are overridden per
    /// trial.
    pub generator: GeneratorSpec,
    pub rhos: Vec<f64>,
    pub teleport: f64,
    pub threshold: f64,
    pub kmeans: KMeansOptions,
    pub output_dir: Option<PathBuf>,
    pub timing: TimingConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            methods: vec![MethodConfig { method: Method::Genclus, variant: Variant::Original }],
            ranks: (6..=10).collect(),
            clusters: 3,
            tols: vec![1e-3, 1e-6, 1e-9],
            max_iters: 1000,
            samples: 100,
            seed: 0,
            gammas: GAMMA_GRID.to_vec(),
            generator: default_paper_spec(GAMMA_GRID[0]),
            rhos: (0..6).map(|i| 0.04 * i as f64).collect(),
            teleport: DEFAULT_TELEPORT,
            threshold: DEFAULT_THRESHOLD,
            kmeans: KMeansOptions::default(),
            output_dir: None,
            timing: TimingConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: Self = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() || self.ranks.is_empty() || self.tols.is_empty() || self.gammas.is_empty() {
            return Err(Error::InvalidArgument("methods, ranks, tols and gammas must be non-empty".into()));
        }
        if self.clusters == 0 || self.ranks.contains(&0) {
            return Err(Error::InvalidArgument("clusters and ranks must be positive".into()));
        }
        if self.tols.iter().any(|t| t.is_nan() || *t <= 0.0) {
            return Err(Error::InvalidArgument("tolerances must be positive".into()));
        }
        if self.methods.iter().any(|m| m.method == Method::RichcomSym) && self.rhos.is_empty() {
            return Err(Error::InvalidArgument("richcom needs at least one rho".into()));
        }
        self.generator.validate()
    }
}
