//! Python bindings: graphs, GenClus and Richcom fits, evaluation and metrics.
//! Matrices cross the boundary as nested lists (numpy arrays are accepted).

use std::collections::BTreeMap;

use genclus_core::eval::{self, PipelineConfig};
use genclus_core::graph::{load_coo_tensor, save_coo_tensor, GroundTruth};
use genclus_core::harness::{preprocess, Preprocess};
use genclus_core::richcom::{build_b_fixed, richcom_fit as core_richcom_fit, RichcomOptions};
use genclus_core::solver::{fit as core_fit, ConstraintKind, ConstraintMode, FitOptions, ModelFile, SolveReport};
use genclus_core::synth::{default_paper_spec, generate as core_generate, scaled_paper_spec};
use genclus_core::MultiViewGraph;
use ndarray::Array2;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_array(rows: &[Vec<f64>]) -> PyResult<Array2<f64>> {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != m) {
        return Err(err("ragged matrix"));
    }
    Array2::from_shape_vec((n, m), rows.iter().flatten().copied().collect()).map_err(err)
}

fn to_rows(a: &Array2<f64>) -> Vec<Vec<f64>> {
    a.outer_iter().map(|r| r.to_vec()).collect()
}

fn kind(name: &str) -> PyResult<ConstraintKind> {
    ConstraintKind::ALL
        .into_iter()
        .find(|k| k.name() == name)
        .ok_or_else(|| err(format!("unknown constraint {name:?}; use all_ones, unconstrained or non_negative")))
}

fn prep(name: &str) -> PyResult<Preprocess> {
    match name {
        "raw" => Ok(Preprocess::Raw),
        "normalized" => Ok(Preprocess::Normalized),
        other => Err(err(format!("unknown preprocessing {other:?}; use raw or normalized"))),
    }
}

/// Multi-view graph on a shared node set, optionally carrying ground truth.
#[pyclass(name = "Graph", module = "genclus", skip_from_py_object)]
#[derive(Clone)]
struct PyGraph {
    inner: MultiViewGraph,
}

#[pymethods]
impl PyGraph {
    #[staticmethod]
    #[pyo3(signature = (slices, symmetric = false))]
    fn from_dense(slices: Vec<Vec<Vec<f64>>>, symmetric: bool) -> PyResult<Self> {
        let mats = slices.iter().map(|s| to_array(s)).collect::<PyResult<Vec<_>>>()?;
        Ok(Self { inner: MultiViewGraph::from_dense(&mats, symmetric).map_err(err)? })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self { inner: load_coo_tensor(path).map_err(err)? })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        save_coo_tensor(&self.inner, path).map_err(err)
    }

    #[getter]
    fn num_nodes(&self) -> usize {
        self.inner.num_nodes()
    }

    #[getter]
    fn num_views(&self) -> usize {
        self.inner.num_views()
    }

    #[getter]
    fn symmetric(&self) -> bool {
        self.inner.is_symmetric()
    }

    /// Dense adjacency of view `k`.
    fn dense(&self, k: usize) -> PyResult<Vec<Vec<f64>>> {
        if k >= self.inner.num_views() {
            return Err(err(format!("view {k} out of range")));
        }
        Ok(to_rows(&self.inner.slice(k).to_dense(self.inner.num_nodes())))
    }

    /// `(view_labels, {structure: node_labels})`, or None without truth.
    fn truth(&self) -> Option<(Vec<usize>, BTreeMap<usize, Vec<usize>>)> {
        self.inner.truth().map(|t| (t.view_labels, t.node_labels))
    }

    fn with_truth(&self, view_labels: Vec<usize>, node_labels: BTreeMap<usize, Vec<usize>>) -> PyResult<Self> {
        let inner = self.inner.clone().with_truth(GroundTruth { view_labels, node_labels }).map_err(err)?;
        Ok(Self { inner })
    }

    fn __repr__(&self) -> String {
        format!("Graph(num_nodes={}, num_views={})", self.inner.num_nodes(), self.inner.num_views())
    }
}

/// Fitted factors `U`, `A`, `B` plus the solve report.
#[pyclass(name = "Model", module = "genclus", skip_from_py_object)]
#[derive(Clone)]
struct PyModel {
    file: ModelFile,
    report: Option<SolveReport>,
}

#[pymethods]
impl PyModel {
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self { file: ModelFile::load(path.as_ref()).map_err(err)?, report: None })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.file.save(path.as_ref()).map_err(err)
    }

    #[getter]
    fn kind(&self) -> String {
        self.file.kind.clone()
    }

    #[getter]
    fn u(&self) -> PyResult<Vec<Vec<f64>>> {
        Ok(to_rows(&self.file.u().map_err(err)?))
    }

    #[getter]
    fn a(&self) -> PyResult<Vec<Vec<f64>>> {
        Ok(to_rows(&self.file.a().map_err(err)?))
    }

    #[getter]
    fn b(&self) -> PyResult<Vec<Vec<f64>>> {
        Ok(to_rows(&self.file.b().map_err(err)?))
    }

    #[getter]
    fn partition(&self) -> Vec<Option<usize>> {
        self.file.partition.clone()
    }

    #[getter]
    fn objective_trace(&self) -> Vec<f64> {
        self.report.as_ref().map(|r| r.objective_trace.clone()).unwrap_or_default()
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.report.as_ref().map_or(0, |r| r.iterations)
    }

    #[getter]
    fn converged(&self) -> bool {
        self.report.as_ref().is_some_and(|r| r.converged)
    }

    #[getter]
    fn warnings(&self) -> Vec<String> {
        self.report.as_ref().map(|r| r.warnings.clone()).unwrap_or_default()
    }

    /// View cluster of each view (None for an all-zero row of `A`).
    fn view_assignment(&self) -> PyResult<Vec<Option<usize>>> {
        Ok(eval::assign_views(&self.file.a().map_err(err)?))
    }

    fn __repr__(&self) -> String {
        format!(
            "Model(kind={:?}, num_nodes={}, num_views={}, clusters={}, rank={})",
            self.file.kind, self.file.num_nodes, self.file.num_views, self.file.num_clusters, self.file.rank
        )
    }
}

/// Synthetic quasi-clique benchmark; `nodes`/`views` rescale the default.
#[pyfunction]
#[pyo3(signature = (gamma = 0.15, seed = 0, nodes = None, views = None))]
fn generate(gamma: f64, seed: u64, nodes: Option<usize>, views: Option<usize>) -> PyResult<PyGraph> {
    let base = default_paper_spec(gamma);
    let spec = match (nodes, views) {
        (None, None) => base,
        (n, v) => scaled_paper_spec(n.unwrap_or(base.num_nodes()), v.unwrap_or(base.num_views()), gamma).map_err(err)?,
    };
    Ok(PyGraph { inner: core_generate(&spec.with_seed(seed)).map_err(err)? })
}

#[pyfunction]
#[pyo3(signature = (
    graph, rank = 6, clusters = 3, mode_a = "non_negative", mode_b = "non_negative",
    tol = 1e-6, max_iters = 1000, seed = 0, preprocessing = "normalized", teleport = 0.01
))]
#[allow(clippy::too_many_arguments)]
fn fit(
    py: Python<'_>,
    graph: &PyGraph,
    rank: usize,
    clusters: usize,
    mode_a: &str,
    mode_b: &str,
    tol: f64,
    max_iters: usize,
    seed: u64,
    preprocessing: &str,
    teleport: f64,
) -> PyResult<PyModel> {
    let mode = ConstraintMode::new(kind(mode_a)?, kind(mode_b)?);
    let how = prep(preprocessing)?;
    let g = graph.inner.clone();
    py.detach(move || {
        let y = preprocess(&g, how, teleport).map_err(err)?;
        let opts = FitOptions { rank, clusters, mode, tol, max_iters, seed };
        let (model, report) = core_fit(&y, &opts).map_err(err)?;
        Ok(PyModel { file: ModelFile::from(&model), report: Some(report) })
    })
}

#[pyfunction]
#[pyo3(signature = (
    graph, rank, clusters, cluster_counts, rho = 0.0, tol = 1e-6, max_iters = 1000,
    seed = 0, restarts = 1, preprocessing = "raw", teleport = 0.01
))]
#[allow(clippy::too_many_arguments)]
fn richcom_fit(
    py: Python<'_>,
    graph: &PyGraph,
    rank: usize,
    clusters: usize,
    cluster_counts: Vec<usize>,
    rho: f64,
    tol: f64,
    max_iters: usize,
    seed: u64,
    restarts: usize,
    preprocessing: &str,
    teleport: f64,
) -> PyResult<PyModel> {
    let how = prep(preprocessing)?;
    let g = graph.inner.clone();
    py.detach(move || {
        let y = preprocess(&g, how, teleport).map_err(err)?;
        let b = build_b_fixed(&cluster_counts, clusters, rank, seed).map_err(err)?;
        let opts = RichcomOptions { rho, tol, max_iters, seed, restarts };
        let (model, report) = core_richcom_fit(&y, &b, &opts).map_err(err)?;
        Ok(PyModel { file: model.to_file(), report: Some(report) })
    })
}

/// Scores a model against the graph's ground truth. Returns a dict with
/// `scores`, `view_assignment`, `node_labels` and the chosen `pipeline`.
#[pyfunction]
#[pyo3(signature = (model, graph, full_grid = true, seed = 0))]
fn evaluate<'py>(py: Python<'py>, model: &PyModel, graph: &PyGraph, full_grid: bool, seed: u64) -> PyResult<Bound<'py, PyDict>> {
    let truth = graph.inner.truth().ok_or_else(|| err("graph has no ground truth"))?;
    let mut cfg = if full_grid {
        PipelineConfig::default()
    } else {
        PipelineConfig::single(PipelineConfig::default().steps[0])
    };
    cfg.seed = seed;
    let f = &model.file;
    let res = eval::evaluate(&f.u().map_err(err)?, &f.a().map_err(err)?, &f.b().map_err(err)?, &truth, &cfg).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("scores", res.scores.clone())?;
    d.set_item("view_assignment", res.view_assignment.clone())?;
    d.set_item("node_labels", res.node_labels.clone())?;
    d.set_item("node_scores", res.node_scores.clone())?;
    d.set_item("pipeline", res.pipeline.label())?;
    Ok(d)
}

#[pyfunction]
fn ami(a: Vec<usize>, b: Vec<usize>) -> PyResult<f64> {
    eval::ami(&a, &b).map_err(err)
}

#[pyfunction]
fn nmi(a: Vec<usize>, b: Vec<usize>) -> PyResult<f64> {
    eval::nmi(&a, &b).map_err(err)
}

#[pyfunction]
fn ari(a: Vec<usize>, b: Vec<usize>) -> PyResult<f64> {
    eval::ari(&a, &b).map_err(err)
}

/// Best rank-limited positive semi-definite approximation of a symmetric matrix.
#[pyfunction]
fn best_psd_approx(y: Vec<Vec<f64>>, rank: usize) -> PyResult<Vec<Vec<f64>>> {
    let (s, _) = genclus_core::best_psd_approx(&to_array(&y)?, rank).map_err(err)?;
    Ok(to_rows(&s))
}

#[pymodule]
fn genclus(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraph>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(richcom_fit, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(ami, m)?)?;
    m.add_function(wrap_pyfunction!(nmi, m)?)?;
    m.add_function(wrap_pyfunction!(ari, m)?)?;
    m.add_function(wrap_pyfunction!(best_psd_approx, m)?)?;
    Ok(())
}
