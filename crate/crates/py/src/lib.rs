use std::path::PathBuf;

use ndarray::Array2;
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use ::losstopo::analysis::{self, KernelKind};
use ::losstopo::landscape::{self, GaussianMixture2D, ScalarLandscape};
use ::losstopo::nn;
use ::losstopo::path::{self, PathConfig};

fn err(e: ::losstopo::Error) -> PyErr {
    match e {
        ::losstopo::Error::Io(e) => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn rows_to_array(rows: &[Vec<f64>]) -> PyResult<Array2<f64>> {
    let n = rows.len();
    let d = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != d) {
        return Err(PyValueError::new_err("rows have different lengths"));
    }
    Array2::from_shape_vec((n, d), rows.concat()).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn array_to_rows(a: &Array2<f64>) -> Vec<Vec<f64>> {
    a.rows().into_iter().map(|r| r.to_vec()).collect()
}

/// A dense network architecture.
#[pyclass(name = "NetworkSpec", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyNetworkSpec {
    inner: nn::NetworkSpec,
}

#[pymethods]
impl PyNetworkSpec {
    /// 784-50-50-10 ReLU classifier without biases.
    #[staticmethod]
    fn fcp() -> Self {
        Self {
            inner: nn::NetworkSpec::fcp(),
        }
    }

    /// 784-32-32-32-784 softplus autoencoder without biases.
    #[staticmethod]
    fn autoencoder() -> Self {
        Self {
            inner: nn::NetworkSpec::autoencoder(),
        }
    }

    #[getter]
    fn n_params(&self) -> usize {
        self.inner.n_params()
    }

    #[getter]
    fn layer_sizes(&self) -> Vec<usize> {
        self.inner.layer_sizes().to_vec()
    }

    fn descriptor(&self) -> String {
        self.inner.descriptor()
    }

    /// Glorot-uniform parameters from `seed`.
    fn init_params(&self, seed: u64) -> Vec<f64> {
        nn::init_params(&self.inner, seed).into_inner()
    }

    /// Mean loss over `inputs` (one row per sample). Classifiers take `labels`;
    /// autoencoders reconstruct their inputs.
    #[pyo3(signature = (params, inputs, labels=None))]
    fn loss(&self, params: Vec<f64>, inputs: Vec<Vec<f64>>, labels: Option<Vec<u8>>) -> PyResult<f64> {
        let x = rows_to_array(&inputs)?;
        let batch = self.batch(&x, labels.as_deref())?;
        nn::loss(&self.inner, &params, &batch).map_err(err)
    }

    /// `(loss, gradient)` for the same arguments as `loss`.
    #[pyo3(signature = (params, inputs, labels=None))]
    fn loss_and_grad(&self, params: Vec<f64>, inputs: Vec<Vec<f64>>, labels: Option<Vec<u8>>) -> PyResult<(f64, Vec<f64>)> {
        let x = rows_to_array(&inputs)?;
        let batch = self.batch(&x, labels.as_deref())?;
        let (l, g) = nn::loss_and_grad(&self.inner, &params, &batch).map_err(err)?;
        Ok((l, g.into_inner()))
    }

    fn predict(&self, params: Vec<f64>, inputs: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        let x = rows_to_array(&inputs)?;
        Ok(array_to_rows(&nn::predict(&self.inner, &params, x.view()).map_err(err)?))
    }

    fn __repr__(&self) -> String {
        format!("NetworkSpec('{}')", self.inner.descriptor())
    }
}

impl PyNetworkSpec {
    fn batch<'a>(&self, x: &'a Array2<f64>, labels: Option<&'a [u8]>) -> PyResult<nn::Batch<'a>> {
        match (self.inner.loss_kind(), labels) {
            (nn::LossKind::CrossEntropySoftmax, Some(l)) => Ok(nn::Batch::classification(x.view(), l)),
            (nn::LossKind::CrossEntropySoftmax, None) => Err(PyValueError::new_err("classifier loss needs labels")),
            (nn::LossKind::MeanSquaredError, _) => Ok(nn::Batch::reconstruction(x.view())),
        }
    }
}

/// Value of the two-dimensional synthetic surface.
#[pyfunction]
fn synthetic_value(x: f64, y: f64) -> f64 {
    landscape::synthetic_value(x, y)
}

/// Gradient of the two-dimensional synthetic surface.
#[pyfunction]
fn synthetic_grad(x: f64, y: f64) -> (f64, f64) {
    landscape::synthetic_grad(x, y)
}

/// Optimizes a Fourier path on the synthetic surface. Returns a dict with
/// `height`, `straight_line_height`, `losses`, `points`, `trace_heights`.
#[pyfunction]
#[pyo3(signature = (lam, start=None, end=None, iterations=None))]
fn synthetic_path<'py>(
    py: Python<'py>,
    lam: f64,
    start: Option<(f64, f64)>,
    end: Option<(f64, f64)>,
    iterations: Option<usize>,
) -> PyResult<Bound<'py, PyDict>> {
    let wi = start.map_or(landscape::SYNTHETIC_W1.to_vec(), |(x, y)| vec![x, y]);
    let wj = end.map_or(landscape::SYNTHETIC_W2.to_vec(), |(x, y)| vec![x, y]);
    let mut cfg = PathConfig::synthetic(lam);
    if let Some(k) = iterations {
        cfg.iterations = k;
    }
    let land = GaussianMixture2D::default();
    let opt = py.detach(|| path::optimize_path(&wi, &wj, &land, &cfg)).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("height", opt.report.height)?;
    d.set_item("straight_line_height", opt.straight_line.height)?;
    d.set_item("losses", opt.report.losses)?;
    d.set_item("points", opt.path.points())?;
    d.set_item("best_iteration", opt.best_iteration)?;
    d.set_item("trace_heights", opt.trace.iter().map(|p| p.height).collect::<Vec<_>>())?;
    Ok(d)
}

/// Golden-section line search of a Python callable along `u >= 0`; returns `(step, evaluations)`.
#[pyfunction]
fn golden_section_search(py: Python<'_>, f: Py<PyAny>) -> PyResult<(f64, usize)> {
    let mut failure = None;
    let result = ::losstopo::optim::gss::golden_section_search(
        |u| match f.call1(py, (u,)).and_then(|v| v.extract::<f64>(py)) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        &Default::default(),
    )
    .map_err(err)?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok((result.step, result.evaluations))
}

fn kernel_from(kind: &str, bandwidth: Option<f64>, degree: u32, offset: f64, dim: usize) -> PyResult<KernelKind> {
    match kind {
        "linear" => Ok(KernelKind::Linear),
        "polynomial" => Ok(KernelKind::Polynomial { degree, offset }),
        "rbf" => Ok(KernelKind::Rbf {
            bandwidth: bandwidth.unwrap_or(dim as f64),
        }),
        other => Err(PyValueError::new_err(format!("unknown kernel '{other}'"))),
    }
}

/// Kernel PCA fitted to a list of points.
#[pyclass(name = "Kpca", frozen)]
struct PyKpca {
    inner: analysis::KpcaModel,
}

#[pymethods]
impl PyKpca {
    /// `kernel` is `linear`, `polynomial` or `rbf` (bandwidth `2 sigma^2`, default: dimension).
    #[new]
    #[pyo3(signature = (points, n_components=2, kernel="rbf", bandwidth=None, degree=2, offset=1.0))]
    fn new(
        points: Vec<Vec<f64>>,
        n_components: usize,
        kernel: &str,
        bandwidth: Option<f64>,
        degree: u32,
        offset: f64,
    ) -> PyResult<Self> {
        let dim = points.first().map_or(0, Vec::len);
        let kind = kernel_from(kernel, bandwidth, degree, offset, dim)?;
        Ok(Self {
            inner: analysis::KpcaModel::fit(&points, kind, n_components).map_err(err)?,
        })
    }

    #[getter]
    fn eigenvalues(&self) -> Vec<f64> {
        self.inner.eigenvalues().to_vec()
    }

    /// Scores of the fit points.
    fn scores(&self) -> Vec<Vec<f64>> {
        array_to_rows(self.inner.fit_scores())
    }

    fn project(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        Ok(self.inner.project(&x).map_err(err)?.to_vec())
    }
}

/// Distances of two point sets from the midpoint of their centroids.
#[pyfunction]
fn shell_stats<'py>(py: Python<'py>, set_a: Vec<Vec<f64>>, set_b: Vec<Vec<f64>>) -> PyResult<Bound<'py, PyDict>> {
    let s = analysis::shell_stats(&set_a, &set_b).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("distances_a", s.distances_a)?;
    d.set_item("distances_b", s.distances_b)?;
    d.set_item("centroid_offset", s.centroid_offset)?;
    d.set_item("origin", s.origin)?;
    Ok(d)
}

/// `(mean, std)` of all components of all vectors.
#[pyfunction]
fn component_stats(vectors: Vec<Vec<f64>>) -> PyResult<(f64, f64)> {
    let s = analysis::component_stats(&vectors).map_err(err)?;
    Ok((s.mean, s.std))
}

/// Vectors stored in a solution-set file.
#[pyfunction]
fn load_solutions(path: PathBuf) -> PyResult<Vec<Vec<f64>>> {
    let set = ::losstopo::harness::SolutionSet::read(&path).map_err(err)?;
    Ok(set.vectors.into_iter().map(|v| v.into_inner()).collect())
}

/// Value and gradient of the synthetic surface through the generic landscape interface.
#[pyfunction]
fn synthetic_value_and_gradient(point: Vec<f64>) -> PyResult<(f64, Vec<f64>)> {
    GaussianMixture2D::default().value_and_gradient(&point).map_err(err)
}

#[pymodule]
fn losstopo(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyNetworkSpec>()?;
    m.add_class::<PyKpca>()?;
    m.add_function(wrap_pyfunction!(synthetic_value, m)?)?;
    m.add_function(wrap_pyfunction!(synthetic_grad, m)?)?;
    m.add_function(wrap_pyfunction!(synthetic_value_and_gradient, m)?)?;
    m.add_function(wrap_pyfunction!(synthetic_path, m)?)?;
    m.add_function(wrap_pyfunction!(golden_section_search, m)?)?;
    m.add_function(wrap_pyfunction!(shell_stats, m)?)?;
    m.add_function(wrap_pyfunction!(component_stats, m)?)?;
    m.add_function(wrap_pyfunction!(load_solutions, m)?)?;
    m.add("SYNTHETIC_W1", landscape::SYNTHETIC_W1.to_vec())?;
    m.add("SYNTHETIC_W2", landscape::SYNTHETIC_W2.to_vec())?;
    Ok(())
}
