//! From fitted factors to scores: view assignment, matching of computed to
//! ground-truth view clusters, embedding postprocessing and clustering, and
//! AMI/NMI/ARI against the planted labels.

pub mod cluster;
pub mod metrics;

use std::collections::BTreeMap;

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::GroundTruth;
use crate::util::derive_seed;

pub use cluster::{inner_product_threshold_cluster, kmeans, KMeansOptions, KMeansResult};
pub use metrics::{ami, ari, nmi};

/// Rows with Euclidean norm at or below this are treated as zero.
pub const ZERO_ROW_TOL: f64 = 1e-12;

pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// View `k` goes to the cluster of largest `|A_km|` (lowest index on ties);
/// all-zero rows get `None`.
pub fn assign_views(a: &Array2<f64>) -> Vec<Option<usize>> {
    a.outer_iter()
        .map(|row| {
            let mut best: Option<(usize, f64)> = None;
            for (m, &v) in row.iter().enumerate() {
                if v != 0.0 && best.is_none_or(|(_, b)| v.abs() > b) {
                    best = Some((m, v.abs()));
                }
            }
            best.map(|(m, _)| m)
        })
        .collect()
}

/// Assignment as plain labels, unassigned views mapped to `sentinel`.
pub fn assignment_labels(assignment: &[Option<usize>], sentinel: usize) -> Vec<usize> {
    assignment.iter().map(|a| a.unwrap_or(sentinel)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterMatch {
    pub truth: usize,
    /// Inner product of the unit membership vectors.
    pub score: f64,
    /// Set when the computed cluster has no views.
    pub empty: bool,
}

/// Pairs each computed cluster `0..clusters` with the truth cluster whose
/// unit-normalized membership vector has the largest inner product with its
/// own (lowest truth id on ties). Several computed clusters may share a truth
/// cluster. Empty computed clusters are paired with the first truth cluster
/// and flagged.
pub fn match_view_clusters(computed: &[Option<usize>], truth: &[usize], clusters: usize) -> Result<Vec<ClusterMatch>> {
    if computed.len() != truth.len() {
        return Err(Error::Dimension(format!(
            "{} computed view labels for {} truth labels",
            computed.len(),
            truth.len()
        )));
    }
    let truth_ids: Vec<usize> = {
        let mut t = truth.to_vec();
        t.sort_unstable();
        t.dedup();
        t
    };
    let first = truth_ids.first().copied().unwrap_or(0);
    Ok((0..clusters)
        .map(|m| {
            let members: Vec<usize> = (0..computed.len()).filter(|&k| computed[k] == Some(m)).collect();
            if members.is_empty() {
                return ClusterMatch { truth: first, score: 0.0, empty: true };
            }
            let mut best = ClusterMatch { truth: first, score: f64::NEG_INFINITY, empty: false };
            for &t in &truth_ids {
                let size = truth.iter().filter(|&&x| x == t).count();
                let common = members.iter().filter(|&&k| truth[k] == t).count();
                let score = common as f64 / ((members.len() * size) as f64).sqrt();
                if score > best.score {
                    best = ClusterMatch { truth: t, score, empty: false };
                }
            }
            best
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Postprocess {
    /// `U` as is.
    Raw,
    /// `U diag(B_m:)`.
    BScale,
    /// `U diag(sqrt |B_m:|)`.
    SqrtAbsB,
}

impl Postprocess {
    pub const ALL: [Postprocess; 3] = [Postprocess::Raw, Postprocess::BScale, Postprocess::SqrtAbsB];
}

/// Embedding transform for cluster `m`; with `unit_norm`, non-zero rows are
/// scaled to unit length and zero rows are left untouched.
pub fn postprocess_embeddings(
    u: &Array2<f64>,
    b: &Array2<f64>,
    m: usize,
    scheme: Postprocess,
    unit_norm: bool,
) -> Result<Array2<f64>> {
    if b.ncols() != u.ncols() || m >= b.nrows() {
        return Err(Error::Dimension(format!(
            "U is {:?}, B is {:?}, cluster {m}",
            u.dim(),
            b.dim()
        )));
    }
    let row = b.row(m);
    let mut out = match scheme {
        Postprocess::Raw => u.clone(),
        Postprocess::BScale => u * &row,
        Postprocess::SqrtAbsB => u * &row.mapv(|v| v.abs().sqrt()),
    };
    if unit_norm {
        for mut r in out.outer_iter_mut() {
            let norm = r.dot(&r).sqrt();
            if norm > ZERO_ROW_TOL {
                r.mapv_inplace(|v| v / norm);
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Clusterer {
    KMeans,
    Threshold { tau: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineStep {
    pub postprocess: Postprocess,
    pub unit_norm: bool,
    pub clusterer: Clusterer,
}

impl PipelineStep {
    pub fn label(&self) -> String {
        let c = match self.clusterer {
            Clusterer::KMeans => "kmeans".to_string(),
            Clusterer::Threshold { tau } => format!("threshold({tau})"),
        };
        let p = match self.postprocess {
            Postprocess::Raw => "raw",
            Postprocess::BScale => "b_scale",
            Postprocess::SqrtAbsB => "sqrt_abs_b",
        };
        format!("{p}{}+{c}", if self.unit_norm { "+unit" } else { "" })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Candidate postprocess/clustering combinations; the best by mean node
    /// AMI is reported.
    pub steps: Vec<PipelineStep>,
    #[serde(default)]
    pub kmeans: KMeansOptions,
    #[serde(default)]
    pub seed: u64,
}

impl PipelineConfig {
    pub fn single(step: PipelineStep) -> Self {
        Self { steps: vec![step], kmeans: KMeansOptions::default(), seed: 0 }
    }

    /// Every postprocess scheme, with and without unit normalization, under
    /// k-means and threshold clustering.
    pub fn full_grid(tau: f64) -> Self {
        let mut steps = Vec::new();
        for clusterer in [Clusterer::KMeans, Clusterer::Threshold { tau }] {
            for postprocess in Postprocess::ALL {
                for unit_norm in [false, true] {
                    steps.push(PipelineStep { postprocess, unit_norm, clusterer });
                }
            }
        }
        Self { steps, kmeans: KMeansOptions::default(), seed: 0 }
    }
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self::full_grid(DEFAULT_THRESHOLD)
    }
}

/// Clusters embedding rows; zero rows share one extra label.
pub fn cluster_embeddings(points: &Array2<f64>, k: usize, clusterer: Clusterer, opts: &KMeansOptions, seed: u64) -> Vec<usize> {
    let n = points.nrows();
    let live: Vec<usize> = (0..n)
        .filter(|&i| points.row(i).dot(&points.row(i)).sqrt() > ZERO_ROW_TOL)
        .collect();
    let sub = points.select(Axis(0), &live);
    let sub_labels = match clusterer {
        Clusterer::KMeans => kmeans(&sub, k, opts, seed).labels,
        Clusterer::Threshold { tau } => inner_product_threshold_cluster(&sub, tau),
    };
    let noise = sub_labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut labels = vec![noise; n];
    for (&i, &l) in live.iter().zip(&sub_labels) {
        labels[i] = l;
    }
    labels
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringResult {
    pub view_assignment: Vec<Option<usize>>,
    pub matched_pairing: Vec<ClusterMatch>,
    /// Node labels per non-empty computed cluster.
    pub node_labels: BTreeMap<usize, Vec<usize>>,
    /// Node AMI per computed cluster (0 for empty clusters).
    pub node_scores: Vec<f64>,
    pub scores: BTreeMap<String, f64>,
    pub pipeline: PipelineStep,
}

impl ClusteringResult {
    pub fn view_ami(&self) -> f64 {
        self.scores["view_ami"]
    }

    pub fn node_ami(&self) -> f64 {
        self.scores["node_ami"]
    }
}

struct StepOutcome {
    labels: BTreeMap<usize, Vec<usize>>,
    node_ami: Vec<f64>,
    node_nmi: Vec<f64>,
    node_ari: Vec<f64>,
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Scores factors `(U, A, B)` against the ground truth. Each computed view
/// cluster is embedded with the columns it owns in `B`; the reported
/// pipeline is the candidate with the largest mean node AMI (first on ties).
pub fn evaluate(
    u: &Array2<f64>,
    a: &Array2<f64>,
    b: &Array2<f64>,
    truth: &GroundTruth,
    cfg: &PipelineConfig,
) -> Result<ClusteringResult> {
    let clusters = a.ncols();
    if b.nrows() != clusters || b.ncols() != u.ncols() || truth.view_labels.len() != a.nrows() {
        return Err(Error::Dimension(format!(
            "U {:?}, A {:?}, B {:?}, {} truth view labels",
            u.dim(),
            a.dim(),
            b.dim(),
            truth.view_labels.len()
        )));
    }
    if cfg.steps.is_empty() {
        return Err(Error::InvalidArgument("pipeline has no candidate steps".into()));
    }
    let assignment = assign_views(a);
    let view_labels = assignment_labels(&assignment, clusters);
    let pairing = match_view_clusters(&assignment, &truth.view_labels, clusters)?;

    let mut best: Option<(usize, StepOutcome)> = None;
    for (si, step) in cfg.steps.iter().enumerate() {
        let mut out = StepOutcome {
            labels: BTreeMap::new(),
            node_ami: Vec::new(),
            node_nmi: Vec::new(),
            node_ari: Vec::new(),
        };
        for (m, pm) in pairing.iter().enumerate() {
            if pm.empty {
                out.node_ami.push(0.0);
                out.node_nmi.push(0.0);
                out.node_ari.push(0.0);
                continue;
            }
            let target = truth.node_labels.get(&pm.truth).ok_or_else(|| {
                Error::InvalidArgument(format!("no node labels for truth cluster {}", pm.truth))
            })?;
            if target.len() != u.nrows() {
                return Err(Error::Dimension(format!("{} node labels for {} nodes", target.len(), u.nrows())));
            }
            let cols: Vec<usize> = (0..b.ncols()).filter(|&r| b[[m, r]] != 0.0).collect();
            let emb = postprocess_embeddings(
                &u.select(Axis(1), &cols),
                &b.select(Axis(1), &cols),
                m,
                step.postprocess,
                step.unit_norm,
            )?;
            let mut k = target.clone();
            k.sort_unstable();
            k.dedup();
            let labels = cluster_embeddings(&emb, k.len(), step.clusterer, &cfg.kmeans, derive_seed(cfg.seed, &[m as u64]));
            out.node_ami.push(ami(target, &labels)?);
            out.node_nmi.push(nmi(target, &labels)?);
            out.node_ari.push(ari(target, &labels)?);
            out.labels.insert(m, labels);
        }
        if best.as_ref().is_none_or(|(_, b)| mean(&out.node_ami) > mean(&b.node_ami)) {
            best = Some((si, out));
        }
    }
    let (si, out) = best.expect("non-empty pipeline");
    let mut scores = BTreeMap::new();
    scores.insert("view_ami".to_string(), ami(&truth.view_labels, &view_labels)?);
    scores.insert("view_nmi".to_string(), nmi(&truth.view_labels, &view_labels)?);
    scores.insert("view_ari".to_string(), ari(&truth.view_labels, &view_labels)?);
    scores.insert("node_ami".to_string(), mean(&out.node_ami));
    scores.insert("node_nmi".to_string(), mean(&out.node_nmi));
    scores.insert("node_ari".to_string(), mean(&out.node_ari));
    Ok(ClusteringResult {
        view_assignment: assignment,
        matched_pairing: pairing,
        node_labels: out.labels,
        node_scores: out.node_ami,
        scores,
        pipeline: cfg.steps[si],
    })
}

/// Factors `(U, A, B)` read off the ground truth: one unit-norm indicator
/// column per node cluster, `A` the view indicator and `B` all ones on the
/// owning structure.
pub fn truth_factors(truth: &GroundTruth) -> Result<(Array2<f64>, Array2<f64>, Array2<f64>)> {
    let structures: Vec<usize> = truth.node_labels.keys().copied().collect();
    let n = truth.node_labels.values().next().map_or(0, |v| v.len());
    let mut cols: Vec<(usize, Vec<f64>)> = Vec::new();
    for (m, s) in structures.iter().enumerate() {
        let labels = &truth.node_labels[s];
        let mut ids = labels.clone();
        ids.sort_unstable();
        ids.dedup();
        for c in ids {
            let size = labels.iter().filter(|&&l| l == c).count() as f64;
            cols.push((m, labels.iter().map(|&l| if l == c { 1.0 / size.sqrt() } else { 0.0 }).collect()));
        }
    }
    let mut u = Array2::<f64>::zeros((n, cols.len()));
    let mut b = Array2::<f64>::zeros((structures.len(), cols.len()));
    for (r, (m, col)) in cols.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            u[[i, r]] = v;
        }
        b[[*m, r]] = 1.0;
    }
    let mut a = Array2::<f64>::zeros((truth.view_labels.len(), structures.len()));
    for (k, l) in truth.view_labels.iter().enumerate() {
        let m = structures
            .iter()
            .position(|s| s == l)
            .ok_or_else(|| Error::InvalidArgument(format!("view {k} has unknown structure {l}")))?;
        a[[k, m]] = 1.0;
    }
    Ok((u, a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn assign_examples() {
        let a = array![[0.0, -3.0, 1.0], [2.0, 2.0, 0.0], [0.0, 0.0, 0.0]];
        assert_eq!(assign_views(&a), vec![Some(1), Some(0), None]);
        let eye = Array2::<f64>::eye(3);
        assert_eq!(assign_views(&eye), vec![Some(0), Some(1), Some(2)]);
    }

    #[test]
    fn match_examples() {
        let computed = [Some(0), Some(0), None, None];
        let m = match_view_clusters(&computed, &[0, 0, 0, 1], 2).unwrap();
        assert_eq!(m[0].truth, 0);
        assert!((m[0].score - 2.0 / 6f64.sqrt()).abs() < 1e-15);
        assert!(m[1].empty && m[1].score == 0.0 && m[1].truth == 0);
        let relabel = match_view_clusters(&[Some(1), Some(1), Some(0)], &[0, 0, 1], 2).unwrap();
        assert_eq!((relabel[0].truth, relabel[1].truth), (1, 0));
    }

    #[test]
    fn postprocess_examples() {
        let u = array![[1.0, 2.0, 3.0], [0.0, 0.0, 0.0]];
        let b = array![[4.0, 0.0, 1.0]];
        assert_eq!(postprocess_embeddings(&u, &b, 0, Postprocess::Raw, false).unwrap(), u);
        assert_eq!(
            postprocess_embeddings(&u, &b, 0, Postprocess::SqrtAbsB, false).unwrap(),
            array![[2.0, 0.0, 3.0], [0.0, 0.0, 0.0]]
        );
        let unit = postprocess_embeddings(&u, &b, 0, Postprocess::BScale, true).unwrap();
        assert!((unit.row(0).dot(&unit.row(0)) - 1.0).abs() < 1e-15);
        assert!(unit.row(1).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn zero_rows_form_noise_cluster() {
        let pts = array![[1.0, 0.0], [0.0, 0.0], [0.9, 0.0], [0.0, 0.0]];
        let labels = cluster_embeddings(&pts, 1, Clusterer::KMeans, &KMeansOptions::default(), 0);
        assert_eq!(labels, vec![0, 1, 0, 1]);
        let all_zero = Array2::<f64>::zeros((3, 2));
        assert_eq!(cluster_embeddings(&all_zero, 2, Clusterer::KMeans, &KMeansOptions::default(), 0), vec![0, 0, 0]);
    }

    fn truth() -> GroundTruth {
        GroundTruth {
            view_labels: vec![0, 0, 1, 1, 1],
            node_labels: [(0, vec![0, 0, 0, 1, 1, 1]), (1, vec![0, 1, 1, 1, 1, 0])].into_iter().collect(),
        }
    }

    #[test]
    fn truth_model_scores_perfectly() {
        let t = truth();
        let (u, a, b) = truth_factors(&t).unwrap();
        let res = evaluate(&u, &a, &b, &t, &PipelineConfig::default()).unwrap();
        assert_eq!(res.view_ami(), 1.0);
        assert_eq!(res.node_ami(), 1.0);
    }

    #[test]
    fn merged_clusters_are_penalized() {
        let t = truth();
        let (u, mut a, b) = truth_factors(&t).unwrap();
        a.column_mut(1).fill(0.0);
        for k in 0..5 {
            a[[k, 0]] = 1.0;
        }
        let res = evaluate(&u, &a, &b, &t, &PipelineConfig::default()).unwrap();
        assert!(res.matched_pairing[1].empty);
        assert_eq!(res.node_scores[1], 0.0);
        assert!(res.node_ami() <= 0.5 + 1e-12);
        assert_eq!(res.view_ami(), 0.0);
    }
}
