use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use genclus_core::eval::{evaluate, PipelineConfig};
use genclus_core::graph::{load_coo_tensor, load_truth, save_coo_tensor, save_truth, GroundTruth};
use genclus_core::harness::{bench_quality, bench_time, preprocess, ExperimentConfig, Method, Preprocess};
use genclus_core::richcom::{build_b_fixed, richcom_fit, RichcomModel, RichcomOptions};
use genclus_core::solver::{fit, ConstraintKind, ConstraintMode, FitOptions, ModelFile};
use genclus_core::synth::{default_paper_spec, generate, scaled_paper_spec, GeneratorSpec};
use serde::{Deserialize, Serialize};

#[derive(Parser)]
#[command(name = "genclus", version, about = "Multi-view graph clustering with multiple view structures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a synthetic multi-view graph and its ground truth.
    Generate(GenerateArgs),
    /// Fit GenClus or symmetric Richcom to a tensor.
    Fit(FitArgs),
    /// Score a fitted model against ground truth.
    Evaluate(EvaluateArgs),
    /// Clustering-quality sweep over the edge-density grid.
    BenchQuality(BenchArgs),
    /// Wall-time scaling sweeps.
    BenchTime(BenchArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Generator spec (JSON). Defaults to the 120-node, 9-view benchmark.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Intra-cluster edge density, used when no config is given.
    #[arg(long, default_value_t = 0.15)]
    gamma: f64,
    /// Rescale the default benchmark to this many nodes.
    #[arg(long)]
    nodes: Option<usize>,
    /// Rescale the default benchmark to this many views.
    #[arg(long)]
    views: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// COO tensor output (`.gz` compresses).
    #[arg(long)]
    out: PathBuf,
    /// Ground-truth JSON output; defaults to `<out>.truth.json`.
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Genclus,
    RichcomSym,
}

#[derive(Clone, Copy, ValueEnum)]
enum PreprocessArg {
    Raw,
    Normalized,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    AllOnes,
    Unconstrained,
    NonNegative,
}

impl From<KindArg> for ConstraintKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::AllOnes => ConstraintKind::AllOnes,
            KindArg::Unconstrained => ConstraintKind::Unconstrained,
            KindArg::NonNegative => ConstraintKind::NonNegative,
        }
    }
}

/// Fit settings read from `--config`; command-line flags override them.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
struct FitConfig {
    method: Method,
    preprocess: Preprocess,
    teleport: f64,
    mode: ConstraintMode,
    rank: usize,
    clusters: usize,
    tol: f64,
    max_iters: usize,
    seed: u64,
    rho: f64,
    restarts: usize,
    /// Node clusters per view structure, used to build Richcom's fixed `B`
    /// when no truth file is given.
    cluster_counts: Option<Vec<usize>>,
}

impl Default for FitConfig {
    fn default() -> Self {
        let f = FitOptions::default();
        Self {
            method: Method::Genclus,
            preprocess: Preprocess::Normalized,
            teleport: ExperimentConfig::default().teleport,
            mode: f.mode,
            rank: f.rank,
            clusters: f.clusters,
            tol: f.tol,
            max_iters: f.max_iters,
            seed: f.seed,
            rho: 0.0,
            restarts: 1,
            cluster_counts: None,
        }
    }
}

#[derive(Args)]
struct FitArgs {
    /// COO tensor to fit.
    #[arg(long)]
    tensor: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    #[arg(long, value_enum)]
    preprocess: Option<PreprocessArg>,
    #[arg(long, value_enum)]
    mode_a: Option<KindArg>,
    #[arg(long, value_enum)]
    mode_b: Option<KindArg>,
    #[arg(long)]
    rank: Option<usize>,
    #[arg(long)]
    clusters: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Ground truth, used only to shape Richcom's fixed `B`.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Model JSON output.
    #[arg(long)]
    out: PathBuf,
    /// Solve report JSON output; defaults to `<out>.report.json`.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    truth: PathBuf,
    /// Pipeline config (JSON); defaults to the full postprocess grid.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Result JSON output; printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Experiment config (JSON); absent fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for independent trials; 1 runs serially.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Output directory; overrides the config's `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    serde_json::from_reader(BufReader::new(f)).with_context(|| format!("parsing {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    serde_json::to_writer_pretty(BufWriter::new(f), value)?;
    Ok(())
}

fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn cmd_generate(args: GenerateArgs) -> Result<()> {
    let mut spec: GeneratorSpec = match (&args.config, args.nodes, args.views) {
        (Some(p), _, _) => read_json(p)?,
        (None, None, None) => default_paper_spec(args.gamma),
        (None, n, v) => {
            let base = default_paper_spec(args.gamma);
            scaled_paper_spec(n.unwrap_or(base.num_nodes()), v.unwrap_or(base.num_views()), args.gamma)?
        }
    };
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let graph = generate(&spec)?;
    save_coo_tensor(&graph, &args.out)?;
    let truth_path = args.truth.unwrap_or_else(|| sidecar(&args.out, ".truth.json"));
    save_truth(&graph.truth().context("generator attached no ground truth")?, &truth_path)?;
    log::info!("wrote {} nodes x {} views to {}", graph.num_nodes(), graph.num_views(), args.out.display());
    Ok(())
}

fn cluster_counts(truth: &GroundTruth) -> Vec<usize> {
    truth
        .node_labels
        .values()
        .map(|labels| {
            let mut l = labels.clone();
            l.sort_unstable();
            l.dedup();
            l.len()
        })
        .collect()
}

fn cmd_fit(args: FitArgs) -> Result<()> {
    let mut cfg: FitConfig = match &args.config {
        Some(p) => read_json(p)?,
        None => FitConfig::default(),
    };
    if let Some(m) = args.method {
        cfg.method = match m {
            MethodArg::Genclus => Method::Genclus,
            MethodArg::RichcomSym => Method::RichcomSym,
        };
    }
    if let Some(p) = args.preprocess {
        cfg.preprocess = match p {
            PreprocessArg::Raw => Preprocess::Raw,
            PreprocessArg::Normalized => Preprocess::Normalized,
        };
    }
    if let Some(a) = args.mode_a {
        cfg.mode.a = a.into();
    }
    if let Some(b) = args.mode_b {
        cfg.mode.b = b.into();
    }
    cfg.rank = args.rank.unwrap_or(cfg.rank);
    cfg.clusters = args.clusters.unwrap_or(cfg.clusters);
    cfg.tol = args.tol.unwrap_or(cfg.tol);
    cfg.max_iters = args.max_iters.unwrap_or(cfg.max_iters);
    cfg.rho = args.rho.unwrap_or(cfg.rho);
    cfg.seed = args.seed.unwrap_or(cfg.seed);

    let graph = load_coo_tensor(&args.tensor)?;
    let y = preprocess(&graph, cfg.preprocess, cfg.teleport)?;
    let report_path = args.report.unwrap_or_else(|| sidecar(&args.out, ".report.json"));
    match cfg.method {
        Method::Genclus => {
            let opts = FitOptions {
                rank: cfg.rank,
                clusters: cfg.clusters,
                mode: cfg.mode,
                tol: cfg.tol,
                max_iters: cfg.max_iters,
                seed: cfg.seed,
            };
            let (model, report) = fit(&y, &opts)?;
            ModelFile::from(&model).save(&args.out)?;
            write_json(&report_path, &report)?;
            log::info!("{} iterations, objective {}", report.iterations, report.final_objective());
        }
        Method::RichcomSym => {
            let counts = match (&args.truth, &cfg.cluster_counts) {
                (Some(p), _) => cluster_counts(&load_truth(p)?),
                (None, Some(c)) => c.clone(),
                (None, None) => bail!("richcom_sym needs --truth or cluster_counts in the config to shape B"),
            };
            let b = build_b_fixed(&counts, cfg.clusters, cfg.rank, cfg.seed)?;
            let opts = RichcomOptions {
                rho: cfg.rho,
                tol: cfg.tol,
                max_iters: cfg.max_iters,
                seed: cfg.seed,
                restarts: cfg.restarts,
            };
            let (model, report): (RichcomModel, _) = richcom_fit(&y, &b, &opts)?;
            model.to_file().save(&args.out)?;
            write_json(&report_path, &report)?;
            log::info!("{} sweeps, objective {}", report.iterations, report.final_objective());
        }
    }
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<()> {
    let model = ModelFile::load(&args.model)?;
    let truth = load_truth(&args.truth)?;
    let mut cfg: PipelineConfig = match &args.config {
        Some(p) => read_json(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let result = evaluate(&model.u()?, &model.a()?, &model.b()?, &truth, &cfg)?;
    match &args.out {
        Some(p) => write_json(p, &result)?,
        None => println!("{}", serde_json::to_string_pretty(&result)?),
    }
    Ok(())
}

fn load_experiment(args: &BenchArgs) -> Result<(ExperimentConfig, PathBuf)> {
    let mut cfg = match &args.config {
        Some(p) => ExperimentConfig::from_json_file(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let dir = args
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("results"));
    cfg.validate()?;
    Ok((cfg, dir))
}

fn cmd_bench_quality(args: BenchArgs) -> Result<()> {
    if args.jobs == 0 {
        bail!("--jobs must be at least 1");
    }
    let (cfg, dir) = load_experiment(&args)?;
    let out = bench_quality(&cfg, args.jobs)?;
    for p in out.write(&dir)? {
        println!("{}", p.display());
    }
    Ok(())
}

fn cmd_bench_time(args: BenchArgs) -> Result<()> {
    let (cfg, dir) = load_experiment(&args)?;
    let out = bench_time(&cfg)?;
    for s in &out.slopes {
        log::info!("{} / {}: log-log slope {:.3}", s.method, s.dim, s.slope);
    }
    for p in out.write(&dir)? {
        println!("{}", p.display());
    }
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Generate(a) => cmd_generate(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::BenchQuality(a) => cmd_bench_quality(a),
        Command::BenchTime(a) => cmd_bench_time(a),
    }
}
