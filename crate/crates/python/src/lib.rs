//! Python bindings: graphs, pair sets, the optimizer, diagnostics and the
//! probe, with embeddings exchanged as `float64` numpy arrays.

use fuse_core::diagnostics::{DEFAULT_POWER_ITERS, DEFAULT_POWER_TOL};
use fuse_core::{
    EmbeddingMatrix, Error, FuseConfig, GradientMode, NodeLabels, Pair, PairSet, Precision,
    ProbeConfig, Sign, SparseGraph,
};
use ndarray::Array2;
use numpy::{IntoPyArray, PyArray1, PyArray2, PyReadonlyArray2};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(err: Error) -> PyErr {
    match err {
        Error::Io { .. } => PyIOError::new_err(err.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn embedding(s: &PyReadonlyArray2<'_, f64>) -> PyResult<EmbeddingMatrix> {
    EmbeddingMatrix::new(s.as_array().to_owned(), Precision::F64).map_err(to_py)
}

fn sign(y: i64) -> PyResult<Sign> {
    Sign::from_i64(y).ok_or_else(|| PyValueError::new_err(format!("pair label must be 1 or -1, got {y}")))
}

fn triples(pairs: &[Pair]) -> Vec<(usize, usize, i64)> {
    pairs
        .iter()
        .map(|p| (p.i as usize, p.j as usize, p.sign.value() as i64))
        .collect()
}

fn pair_list(triples: Vec<(usize, usize, i64)>) -> PyResult<Vec<Pair>> {
    triples
        .into_iter()
        .map(|(i, j, y)| Ok(Pair::new(i, j, sign(y)?)))
        .collect()
}

/// Undirected simple graph on nodes `0..n`.
#[pyclass(module = "fuse_embed", frozen)]
pub struct Graph {
    inner: SparseGraph,
}

#[pymethods]
impl Graph {
    /// Self-loops and duplicate edges are dropped.
    #[new]
    fn new(n: usize, edges: Vec<(usize, usize)>) -> PyResult<Self> {
        let (inner, _) = SparseGraph::from_edges(n, &edges).map_err(to_py)?;
        Ok(Graph { inner })
    }

    /// Reads a whitespace-separated edge list; returns the graph and the
    /// external node id of every row.
    #[staticmethod]
    fn from_edge_list(path: std::path::PathBuf) -> PyResult<(Self, Vec<u64>)> {
        let (inner, ids, _) = SparseGraph::load_edge_list(&path, true).map_err(to_py)?;
        Ok((Graph { inner }, ids.externals().to_vec()))
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m()
    }

    fn degrees<'py>(&self, py: Python<'py>) -> Bound<'py, PyArray1<f64>> {
        PyArray1::from_slice(py, self.inner.degrees())
    }

    fn edges(&self) -> Vec<(usize, usize)> {
        self.inner.edges().collect()
    }

    fn __repr__(&self) -> String {
        format!("Graph(n={}, m={})", self.inner.n(), self.inner.m())
    }
}

/// Signed node pairs; labels are `1` (same class) or `-1`.
#[pyclass(module = "fuse_embed", frozen)]
pub struct Pairs {
    inner: PairSet,
}

#[pymethods]
impl Pairs {
    #[new]
    fn new(n: usize, pairs: Vec<(usize, usize, i64)>) -> PyResult<Self> {
        let inner = PairSet::new(n, pair_list(pairs)?).map_err(to_py)?;
        Ok(Pairs { inner })
    }

    /// Balanced sampling from node class labels. Repeated draws collapse,
    /// so the result may hold fewer than `count` pairs.
    #[staticmethod]
    #[pyo3(signature = (labels, count, seed=0))]
    fn generate(labels: Vec<usize>, count: usize, seed: u64) -> PyResult<Self> {
        let labels = NodeLabels::new(labels).map_err(to_py)?;
        let (inner, _) = fuse_core::generate_pairs(&labels, count, seed).map_err(to_py)?;
        Ok(Pairs { inner })
    }

    /// Copy with `round(fraction * len)` labels inverted.
    #[pyo3(signature = (fraction, seed=0))]
    fn flip(&self, fraction: f64, seed: u64) -> PyResult<Self> {
        let inner = fuse_core::flip_labels(&self.inner, fraction, seed).map_err(to_py)?;
        Ok(Pairs { inner })
    }

    /// Shuffled train/test split of the pair list.
    #[pyo3(signature = (train_fraction=0.8, seed=0))]
    fn split(&self, train_fraction: f64, seed: u64) -> PyResult<(Self, Self)> {
        let (train, test) =
            fuse_core::probe::split_pairs(&self.inner, train_fraction, seed).map_err(to_py)?;
        let n = self.inner.n();
        Ok((
            Pairs { inner: PairSet::new(n, train).map_err(to_py)? },
            Pairs { inner: PairSet::new(n, test).map_err(to_py)? },
        ))
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn to_list(&self) -> Vec<(usize, usize, i64)> {
        triples(self.inner.pairs())
    }

    fn __repr__(&self) -> String {
        format!(
            "Pairs(n={}, positive={}, negative={})",
            self.inner.n(),
            self.inner.count(Sign::Positive),
            self.inner.count(Sign::Negative)
        )
    }
}

/// Rows drawn uniformly from the unit sphere.
#[pyfunction]
#[pyo3(signature = (n, k, seed=0))]
fn init_embedding<'py>(py: Python<'py>, n: usize, k: usize, seed: u64) -> PyResult<Bound<'py, PyArray2<f64>>> {
    let s = fuse_core::init_embedding(n, k, seed).map_err(to_py)?;
    Ok(s.into_array().into_pyarray(py))
}

type FitResult<'py> = (Bound<'py, PyArray2<f64>>, Vec<f64>, Bound<'py, PyDict>);

/// Runs the optimizer; returns `(embedding, objective trace, params)`.
#[pyfunction]
#[pyo3(signature = (
    graph, pairs, k=128, iterations=100, eta_scaled=1e5, lambda_scaled=0.75,
    gradient_mode="approximate", seed=0, precision="f64",
))]
#[allow(clippy::too_many_arguments)]
fn fit<'py>(
    py: Python<'py>,
    graph: &Graph,
    pairs: &Pairs,
    k: usize,
    iterations: usize,
    eta_scaled: f64,
    lambda_scaled: f64,
    gradient_mode: &str,
    seed: u64,
    precision: &str,
) -> PyResult<FitResult<'py>> {
    let config = FuseConfig {
        k,
        eta_scaled,
        lambda_scaled,
        iterations,
        gradient_mode: gradient_mode.parse().map_err(to_py)?,
        seed,
        precision: precision.parse().map_err(to_py)?,
    };
    let out = py
        .detach(|| fuse_core::fuse_fit(&graph.inner, &pairs.inner, &config))
        .map_err(to_py)?;
    let params = PyDict::new(py);
    params.set_item("p_star", out.params.p_star)?;
    params.set_item("d_star", out.params.d_star)?;
    params.set_item("eta", out.params.eta)?;
    params.set_item("lambda", out.params.lambda)?;
    Ok((out.embedding.into_array().into_pyarray(py), out.trace, params))
}

/// Unscaled structural ascent direction for `s`.
#[pyfunction]
#[pyo3(signature = (graph, s, gradient_mode="approximate"))]
fn structural_gradient<'py>(
    py: Python<'py>,
    graph: &Graph,
    s: PyReadonlyArray2<'py, f64>,
    gradient_mode: &str,
) -> PyResult<Bound<'py, PyArray2<f64>>> {
    let mode: GradientMode = gradient_mode.parse().map_err(to_py)?;
    let g = fuse_core::structural_gradient(&graph.inner, s.as_array(), mode).map_err(to_py)?;
    Ok(g.into_pyarray(py))
}

/// `L_c s` for the contrastive Laplacian of `pairs`.
#[pyfunction]
fn apply_contrastive_laplacian<'py>(
    py: Python<'py>,
    pairs: &Pairs,
    s: PyReadonlyArray2<'py, f64>,
) -> PyResult<Bound<'py, PyArray2<f64>>> {
    let out: Array2<f64> =
        fuse_core::apply_contrastive_laplacian(&pairs.inner, s.as_array()).map_err(to_py)?;
    Ok(out.into_pyarray(py))
}

/// Objective value at `s` for an effective contrastive weight `lam`.
#[pyfunction]
#[pyo3(signature = (graph, pairs, s, lam, gradient_mode="approximate"))]
fn objective(
    graph: &Graph,
    pairs: &Pairs,
    s: PyReadonlyArray2<'_, f64>,
    lam: f64,
    gradient_mode: &str,
) -> PyResult<f64> {
    let mode: GradientMode = gradient_mode.parse().map_err(to_py)?;
    fuse_core::objective(&graph.inner, &pairs.inner, s.as_array(), lam, mode).map_err(to_py)
}

/// Cosine similarity between the exact and approximate structural gradients.
#[pyfunction]
fn gradient_alignment(graph: &Graph, s: PyReadonlyArray2<'_, f64>) -> PyResult<f64> {
    fuse_core::gradient_alignment(&graph.inner, s.as_array()).map_err(to_py)
}

#[pyfunction]
fn zagreb_report<'py>(py: Python<'py>, graph: &Graph) -> PyResult<Bound<'py, PyDict>> {
    let r = fuse_core::zagreb_report(&graph.inner);
    let d = PyDict::new(py);
    d.set_item("n", r.n)?;
    d.set_item("m", r.m)?;
    d.set_item("zagreb_m2", r.zagreb_m2)?;
    d.set_item("zagreb_constant", r.zagreb_constant)?;
    d.set_item("degree_norm", r.degree_norm)?;
    d.set_item("m_min", r.m_min)?;
    d.set_item("bound_satisfied", r.bound_satisfied)?;
    d.set_item("rate_inv_sqrt_m", r.rate_inv_sqrt_m)?;
    d.set_item("rate_degree_term", r.rate_degree_term)?;
    Ok(d)
}

/// Power-iteration estimate of the gradient's Lipschitz constant.
#[pyfunction]
#[pyo3(signature = (graph, pairs, lam, iterations=DEFAULT_POWER_ITERS, tol=DEFAULT_POWER_TOL))]
fn lipschitz_estimate<'py>(
    py: Python<'py>,
    graph: &Graph,
    pairs: &Pairs,
    lam: f64,
    iterations: usize,
    tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let e = py
        .detach(|| fuse_core::lipschitz_estimate(&graph.inner, &pairs.inner, lam, iterations, tol))
        .map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("value", e.value)?;
    d.set_item("sigma_max", e.sigma_max)?;
    d.set_item("iterations", e.iterations)?;
    d.set_item("converged", e.converged)?;
    Ok(d)
}

fn probe_config(epochs: usize, learning_rate: f64, train_fraction: f64, seed: u64, symmetrize: bool) -> ProbeConfig {
    ProbeConfig {
        epochs,
        learning_rate,
        train_fraction,
        seed,
        symmetrize,
        ..ProbeConfig::default()
    }
}

fn result_dict<'py>(py: Python<'py>, r: fuse_core::EvalResult) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("accuracy", r.accuracy)?;
    d.set_item("macro_f1", r.macro_f1)?;
    d.set_item("f1_positive", r.f1_positive)?;
    d.set_item("f1_negative", r.f1_negative)?;
    d.set_item("n_train", r.n_train)?;
    d.set_item("n_test", r.n_test)?;
    Ok(d)
}

/// Trains the pairwise probe on a held-out split of `pairs` and scores the rest.
#[pyfunction]
#[pyo3(signature = (s, pairs, epochs=100, learning_rate=1e-3, train_fraction=0.8, seed=0, symmetrize=false))]
#[allow(clippy::too_many_arguments)]
fn evaluate<'py>(
    py: Python<'py>,
    s: PyReadonlyArray2<'py, f64>,
    pairs: &Pairs,
    epochs: usize,
    learning_rate: f64,
    train_fraction: f64,
    seed: u64,
    symmetrize: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let s = embedding(&s)?;
    let config = probe_config(epochs, learning_rate, train_fraction, seed, symmetrize);
    let r = fuse_core::evaluate(&s, &pairs.inner, &config).map_err(to_py)?;
    result_dict(py, r)
}

/// Trains on `train`, scores on `test`; returns `(metrics, flat weights)`.
#[pyfunction]
#[pyo3(signature = (s, train, test, epochs=100, learning_rate=1e-3, seed=0, symmetrize=false))]
#[allow(clippy::too_many_arguments)]
fn fit_and_score<'py>(
    py: Python<'py>,
    s: PyReadonlyArray2<'py, f64>,
    train: &Pairs,
    test: &Pairs,
    epochs: usize,
    learning_rate: f64,
    seed: u64,
    symmetrize: bool,
) -> PyResult<(Bound<'py, PyDict>, Vec<f64>)> {
    let s = embedding(&s)?;
    let config = probe_config(epochs, learning_rate, ProbeConfig::default().train_fraction, seed, symmetrize);
    let (r, weights) =
        fuse_core::fit_and_score(&s, train.inner.pairs(), test.inner.pairs(), &config).map_err(to_py)?;
    Ok((result_dict(py, r)?, weights.to_flat()))
}

#[pymodule]
fn fuse_embed(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Graph>()?;
    m.add_class::<Pairs>()?;
    m.add_function(wrap_pyfunction!(init_embedding, m)?)?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(structural_gradient, m)?)?;
    m.add_function(wrap_pyfunction!(apply_contrastive_laplacian, m)?)?;
    m.add_function(wrap_pyfunction!(objective, m)?)?;
    m.add_function(wrap_pyfunction!(gradient_alignment, m)?)?;
    m.add_function(wrap_pyfunction!(zagreb_report, m)?)?;
    m.add_function(wrap_pyfunction!(lipschitz_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(fit_and_score, m)?)?;
    Ok(())
}
