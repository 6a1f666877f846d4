//! Python bindings. Embeddings cross the boundary as lists of vertex rows
//! (the null-vertex row is implicit), labels as lists of 1-based ints, and
//! `None` stands for an automatically resolved tuning value.

use std::fs::File;
use std::io::{BufReader, BufWriter};

use hypercomm::eval::{self, BenchCell, BenchSettings, Method};
use hypercomm::hypergraph::{self, Hypergraph, IngestOptions};
use hypercomm::{baselines, synth, EmbeddingMatrix, Execution, Tunable};
use nalgebra::DMatrix;
use pyo3::exceptions::{PyArithmeticError, PyOSError, PyOverflowError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: hypercomm::Error) -> PyErr {
    use hypercomm::Error as E;
    let msg = e.to_string();
    match e {
        E::InvalidArgument(_) | E::Parse { .. } | E::Validation(_) | E::EmptyNetwork => PyValueError::new_err(msg),
        E::Overflow(_) => PyOverflowError::new_err(msg),
        E::Numeric { .. } => PyArithmeticError::new_err(msg),
        E::Io(_) => PyOSError::new_err(msg),
        E::Invariant(_) => PyRuntimeError::new_err(msg),
    }
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn embedding(vertex_rows: &[Vec<f64>]) -> PyResult<EmbeddingMatrix> {
    let r = vertex_rows.first().map_or(0, Vec::len);
    if r == 0 || vertex_rows.iter().any(|row| row.len() != r) {
        return Err(PyValueError::new_err("embedding must be a non-empty list of equal-length rows"));
    }
    let flat: Vec<f64> = vertex_rows.concat();
    EmbeddingMatrix::from_vertex_rows(&DMatrix::from_row_slice(vertex_rows.len(), r, &flat)).map_err(to_py)
}

fn tunable(v: Option<f64>) -> Tunable {
    v.map_or(Tunable::Auto, Tunable::Fixed)
}

/// A hypergraph on vertices `1..=n` with range `m`.
#[pyclass(name = "Hypergraph", module = "hypercomm", frozen)]
pub struct PyHypergraph {
    inner: Hypergraph,
}

#[pymethods]
impl PyHypergraph {
    #[new]
    fn new(n: usize, m: usize, edges: Vec<Vec<usize>>) -> PyResult<Self> {
        Ok(Self { inner: Hypergraph::new(n, m, edges).map_err(to_py)? })
    }

    /// Reads a `.hg` hyperedge list.
    #[staticmethod]
    #[pyo3(signature = (path, *, min_size=None, max_size=None, clique_expand=None, n=None, m=None))]
    fn load(
        path: &str,
        min_size: Option<usize>,
        max_size: Option<usize>,
        clique_expand: Option<usize>,
        n: Option<usize>,
        m: Option<usize>,
    ) -> PyResult<Self> {
        let file = File::open(path).map_err(|e| PyOSError::new_err(format!("{path}: {e}")))?;
        let opts = IngestOptions { n, m, min_size, max_size, clique_cap: clique_expand };
        Ok(Self { inner: hypergraph::load_hyperedge_list(BufReader::new(file), &opts).map_err(to_py)? })
    }

    fn write(&self, path: &str) -> PyResult<()> {
        let file = File::create(path).map_err(|e| PyOSError::new_err(format!("{path}: {e}")))?;
        self.inner.write_hg(BufWriter::new(file)).map_err(to_py)
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m()
    }

    #[getter]
    fn num_edges(&self) -> usize {
        self.inner.num_edges()
    }

    fn edges(&self) -> Vec<Vec<usize>> {
        self.inner.edges().to_vec()
    }

    fn degrees(&self) -> Vec<usize> {
        self.inner.degrees()
    }

    fn estimate_sparsity(&self) -> PyResult<f64> {
        hypergraph::estimate_sparsity(&self.inner).map_err(to_py)
    }

    fn clique_expand(&self, cap: usize) -> PyResult<Self> {
        Ok(Self { inner: hypergraph::clique_expand(&self.inner, cap).map_err(to_py)? })
    }

    fn __len__(&self) -> usize {
        self.inner.num_edges()
    }

    fn __repr__(&self) -> String {
        format!("Hypergraph(n={}, m={}, edges={})", self.inner.n(), self.inner.m(), self.inner.num_edges())
    }
}

/// Settings for `fit`. `None` resolves automatically.
#[pyclass(name = "FitConfig", module = "hypercomm", get_all, set_all)]
pub struct PyFitConfig {
    k: usize,
    r: usize,
    s_n: Option<f64>,
    lambda0: Option<f64>,
    lambda1: Option<f64>,
    eta0: Option<f64>,
    tol: f64,
    max_outer: usize,
    seed: u64,
    c0: Option<f64>,
    kmeans_restarts: usize,
    parallel: bool,
}

#[pymethods]
impl PyFitConfig {
    #[new]
    #[pyo3(signature = (k, r, *, s_n=None, lambda0=None, lambda1=None, eta0=None, tol=1e-6, max_outer=500, seed=0, c0=None, kmeans_restarts=10, parallel=false))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        k: usize,
        r: usize,
        s_n: Option<f64>,
        lambda0: Option<f64>,
        lambda1: Option<f64>,
        eta0: Option<f64>,
        tol: f64,
        max_outer: usize,
        seed: u64,
        c0: Option<f64>,
        kmeans_restarts: usize,
        parallel: bool,
    ) -> Self {
        Self { k, r, s_n, lambda0, lambda1, eta0, tol, max_outer, seed, c0, kmeans_restarts, parallel }
    }

    fn __repr__(&self) -> String {
        format!("FitConfig(k={}, r={}, s_n={:?}, seed={})", self.k, self.r, self.s_n, self.seed)
    }
}

impl PyFitConfig {
    fn to_core(&self) -> hypercomm::FitConfig {
        let mut c = hypercomm::FitConfig::new(self.k, self.r);
        c.s_n = tunable(self.s_n);
        c.lambda0 = tunable(self.lambda0);
        c.lambda1 = tunable(self.lambda1);
        c.eta0 = tunable(self.eta0);
        c.tol = self.tol;
        c.max_outer = self.max_outer;
        c.seed = self.seed;
        c.c0 = self.c0;
        c.kmeans_restarts = self.kmeans_restarts;
        c.execution = if self.parallel { Execution::Parallel } else { Execution::Serial };
        c
    }
}

#[pyclass(name = "FitResult", module = "hypercomm", frozen, get_all)]
pub struct PyFitResult {
    labels: Vec<usize>,
    alpha_hat: Vec<Vec<f64>>,
    alpha_init: Vec<Vec<f64>>,
    /// `K x r` community centers.
    centers: Vec<Vec<f64>>,
    loss_trace: Vec<f64>,
    eta_trace: Vec<f64>,
    outer_iters: usize,
    converged: bool,
    final_eta: f64,
    s_n: f64,
    lambda0: f64,
    lambda1: f64,
}

#[pymethods]
impl PyFitResult {
    fn __repr__(&self) -> String {
        format!("FitResult(n={}, iterations={}, converged={})", self.labels.len(), self.outer_iters, self.converged)
    }
}

/// Fits the embedding model and returns labels, embedding and traces.
#[pyfunction]
fn fit(py: Python<'_>, h: &PyHypergraph, config: &PyFitConfig) -> PyResult<PyFitResult> {
    let cfg = config.to_core();
    let res = py.detach(|| hypercomm::fit(&h.inner, &cfg)).map_err(to_py)?;
    let k = res.labels.k();
    Ok(PyFitResult {
        labels: res.labels.labels().to_vec(),
        alpha_hat: rows(&res.alpha_hat.vertex_rows()),
        alpha_init: rows(&res.alpha_init.vertex_rows()),
        centers: rows(&res.centers.rows(0, k).into_owned()),
        loss_trace: res.loss_trace,
        eta_trace: res.eta_trace,
        outer_iters: res.outer_iters,
        converged: res.converged,
        final_eta: res.final_eta,
        s_n: res.params.s_n,
        lambda0: res.params.lambda0,
        lambda1: res.params.lambda1,
    })
}

/// Samples a planted hypergraph; returns `(hypergraph, labels, alpha_rows)`.
#[pyfunction]
#[pyo3(signature = (scenario, n, k, r, s_n, *, m=3, seed=0))]
fn generate(scenario: u8, n: usize, k: usize, r: usize, s_n: f64, m: usize, seed: u64) -> PyResult<(PyHypergraph, Vec<usize>, Vec<Vec<f64>>)> {
    let params = synth::ScenarioParams::new(n, k, m, r, s_n, seed);
    let (h, truth) = synth::generate(scenario, params).map_err(to_py)?;
    Ok((PyHypergraph { inner: h }, truth.labels_star.labels().to_vec(), rows(&truth.alpha_star.vertex_rows())))
}

#[pyfunction]
#[pyo3(signature = (h, k, seed=0))]
fn wptg_detect(h: &PyHypergraph, k: usize, seed: u64) -> PyResult<Vec<usize>> {
    Ok(baselines::wptg_detect(&h.inner, k, seed).map_err(to_py)?.labels().to_vec())
}

#[pyfunction]
#[pyo3(signature = (h, k, seed=0))]
fn shp_detect(h: &PyHypergraph, k: usize, seed: u64) -> PyResult<Vec<usize>> {
    Ok(baselines::shp_detect(&h.inner, k, seed).map_err(to_py)?.labels().to_vec())
}

/// Misclassification rate minimized over relabelings.
#[pyfunction]
fn hamming_error(truth: Vec<usize>, pred: Vec<usize>, k: usize) -> PyResult<f64> {
    eval::hamming_error(&truth, &pred, k).map_err(to_py)
}

/// Averaged Hellinger distance between the edge laws of two embeddings.
#[pyfunction]
fn hellinger(alpha_a: Vec<Vec<f64>>, alpha_b: Vec<Vec<f64>>, m: usize, s_n: f64) -> PyResult<f64> {
    eval::hellinger_between(&embedding(&alpha_a)?, &embedding(&alpha_b)?, m, s_n).map_err(to_py)
}

/// Number of candidate vertex sets of size `1..=m` among `n` vertices.
#[pyfunction]
fn phi(n: usize, m: usize) -> PyResult<u64> {
    hypergraph::phi(n, m).map_err(to_py)
}

/// Replicated benchmark; returns one dict per cell and method.
#[pyfunction]
#[pyo3(signature = (scenario, n_list, sn_list, *, reps=1, methods=vec!["hem".to_string(), "wptg".to_string(), "shp".to_string()], seed=0, k=2, m=3, r=10, lambda0=None))]
#[allow(clippy::too_many_arguments)]
fn benchmark<'py>(
    py: Python<'py>,
    scenario: u8,
    n_list: Vec<usize>,
    sn_list: Vec<f64>,
    reps: usize,
    methods: Vec<String>,
    seed: u64,
    k: usize,
    m: usize,
    r: usize,
    lambda0: Option<f64>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let methods = methods.iter().map(|s| s.parse::<Method>()).collect::<Result<Vec<_>, _>>().map_err(to_py)?;
    let grid: Vec<BenchCell> = n_list.iter().flat_map(|&n| sn_list.iter().map(move |&s_n| BenchCell { scenario, n, s_n })).collect();
    let mut settings = BenchSettings::new(k, m, r);
    settings.hem.lambda0 = tunable(lambda0);
    let reports = py.detach(|| eval::benchmark(&grid, &methods, reps, seed, &settings)).map_err(to_py)?;
    reports
        .iter()
        .map(|rep| {
            let d = PyDict::new(py);
            d.set_item("scenario", rep.scenario)?;
            d.set_item("n", rep.n)?;
            d.set_item("s_n", rep.s_n)?;
            d.set_item("method", rep.method.name())?;
            d.set_item("mean", rep.mean)?;
            d.set_item("sd", rep.sd)?;
            d.set_item("reps", rep.reps)?;
            d.set_item("seconds", rep.seconds)?;
            d.set_item("errors", rep.errors.clone())?;
            d.set_item("failures", rep.failures.clone())?;
            Ok(d)
        })
        .collect()
}

#[pymodule(name = "hypercomm")]
mod hypercomm_py {
    #[pymodule_export]
    use super::{benchmark, fit, generate, hamming_error, hellinger, phi, shp_detect, wptg_detect, PyFitConfig, PyFitResult, PyHypergraph};
}
