//! Python bindings for `kmeans_landscape`.
//!
//! Structured results (classification reports, trajectories, certificates,
//! surveys) cross the boundary as JSON strings; decode them with `json.loads`.

use kmeans_landscape::classify::{classify, Thresholds};
use kmeans_landscape::error::Error;
use kmeans_landscape::geometry::Solution;
use kmeans_landscape::lloyd::{run_lloyd, EmptyCellPolicy, Init, LloydConfig, LloydTarget};
use kmeans_landscape::model::{MixtureModel, ModelKind, SampleSet};
use kmeans_landscape::objective::empirical_objective;
use kmeans_landscape::population::{Estimator, Population};
use kmeans_landscape::{survey, verify};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Config(_) | Error::InvalidModel(_) | Error::DimensionMismatch { .. } | Error::Json(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn to_json<T: Serialize>(v: &T) -> PyResult<String> {
    serde_json::to_string(v).map_err(|e| py_err(e.into()))
}

fn from_json<T: serde::de::DeserializeOwned>(s: &str) -> PyResult<T> {
    serde_json::from_str(s).map_err(|e| py_err(Error::Config(e.to_string())))
}

fn parse_kind(kind: &str) -> PyResult<ModelKind> {
    match kind {
        "ball" => Ok(ModelKind::Ball),
        "gaussian" => Ok(ModelKind::Gaussian),
        other => Err(PyValueError::new_err(format!("unknown model kind {other:?}"))),
    }
}

/// Parse an estimator name: `analytic1d`, `quadrature1d` or `monte_carlo`.
pub fn parse_estimator(name: &str, n: usize, seed: Option<u64>, nodes: usize) -> Result<Estimator, Error> {
    match name {
        "analytic1d" => Ok(Estimator::Analytic1D),
        "quadrature1d" => Ok(Estimator::Quadrature1D { nodes }),
        "mc" | "monte_carlo" => match seed {
            Some(seed) => Ok(Estimator::MonteCarlo { n, seed }),
            None => Err(Error::Config("monte_carlo estimator needs a seed".into())),
        },
        other => Err(Error::Config(format!("unknown estimator {other:?}"))),
    }
}

/// A balanced Ball or Gaussian mixture.
#[pyclass(name = "MixtureModel", module = "kmeans_landscape_py", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyMixtureModel {
    pub inner: MixtureModel,
}

#[pymethods]
impl PyMixtureModel {
    #[new]
    #[pyo3(signature = (kind, centers, scale, allow_overlap = false))]
    fn new(kind: &str, centers: Vec<Vec<f64>>, scale: f64, allow_overlap: bool) -> PyResult<Self> {
        let kind = parse_kind(kind)?;
        let inner = if allow_overlap {
            MixtureModel::with_overlap(kind, centers, scale)
        } else {
            MixtureModel::new(kind, centers, scale)
        };
        inner.map(|inner| Self { inner }).map_err(py_err)
    }

    #[staticmethod]
    fn from_json(s: &str) -> PyResult<Self> {
        Ok(Self { inner: from_json(s)? })
    }

    fn to_json(&self) -> PyResult<String> {
        to_json(&self.inner)
    }

    #[getter]
    fn kind(&self) -> &'static str {
        match self.inner.kind() {
            ModelKind::Ball => "ball",
            ModelKind::Gaussian => "gaussian",
        }
    }

    #[getter]
    fn centers(&self) -> Vec<Vec<f64>> {
        self.inner.centers().to_vec()
    }

    #[getter]
    fn scale(&self) -> f64 {
        self.inner.scale()
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn density(&self, x: Vec<f64>) -> PyResult<f64> {
        self.inner.density(&x).map_err(py_err)
    }

    /// Separation statistics (`delta_min`, `eta_min`, ...) as JSON.
    fn separation_stats(&self) -> PyResult<String> {
        to_json(&self.inner.separation_stats().map_err(py_err)?)
    }

    /// Draw `n` labeled points; returns `(labels, points)`.
    fn sample(&self, py: Python<'_>, n: usize, seed: u64) -> PyResult<(Option<Vec<usize>>, Vec<Vec<f64>>)> {
        let set = py.detach(|| self.inner.sample(n, seed)).map_err(py_err)?;
        Ok((set.labels, set.points))
    }

    /// The canonical many-fit-one / one-fit-many spurious configuration (k >= 3).
    fn spurious_configuration(&self) -> PyResult<PySolution> {
        survey::spurious_configuration(&self.inner).map(|inner| PySolution { inner }).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("MixtureModel(kind={:?}, k={}, dim={}, scale={})", self.kind(), self.k(), self.dim(), self.scale())
    }
}

/// A set of fitted centers.
#[pyclass(name = "Solution", module = "kmeans_landscape_py", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PySolution {
    pub inner: Solution,
}

#[pymethods]
impl PySolution {
    #[new]
    fn new(centers: Vec<Vec<f64>>) -> PyResult<Self> {
        Solution::new(centers).map(|inner| Self { inner }).map_err(py_err)
    }

    #[getter]
    fn centers(&self) -> Vec<Vec<f64>> {
        self.inner.centers().to_vec()
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn to_json(&self) -> PyResult<String> {
        to_json(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!("Solution({:?})", self.inner.centers())
    }
}

/// A mixture model paired with an estimator for population quantities.
#[pyclass(name = "Population", module = "kmeans_landscape_py", frozen)]
pub struct PyPopulation {
    pub inner: Population,
}

#[pymethods]
impl PyPopulation {
    #[new]
    #[pyo3(signature = (model, estimator = "monte_carlo", n = 200_000, seed = None, nodes = 2001))]
    fn new(
        py: Python<'_>,
        model: &PyMixtureModel,
        estimator: &str,
        n: usize,
        seed: Option<u64>,
        nodes: usize,
    ) -> PyResult<Self> {
        let est = parse_estimator(estimator, n, seed, nodes).map_err(py_err)?;
        let model = model.inner.clone();
        py.detach(|| Population::new(model, est)).map(|inner| Self { inner }).map_err(py_err)
    }

    #[getter]
    fn model(&self) -> PyMixtureModel {
        PyMixtureModel { inner: self.inner.model().clone() }
    }

    /// Population objective as `(value, stderr)`.
    fn objective(&self, py: Python<'_>, solution: &PySolution) -> PyResult<(f64, f64)> {
        let e = py.detach(|| self.inner.objective(&solution.inner)).map_err(py_err)?;
        Ok((e.value, e.stderr))
    }

    /// Cell masses, centroids and per-component statistics as JSON.
    fn cell_stats(&self, py: Python<'_>, solution: &PySolution) -> PyResult<String> {
        to_json(&py.detach(|| self.inner.cell_stats(&solution.inner)).map_err(py_err)?)
    }

    /// Association report as JSON; `thresholds` is an optional JSON object.
    #[pyo3(signature = (solution, thresholds = None))]
    fn classify(&self, py: Python<'_>, solution: &PySolution, thresholds: Option<&str>) -> PyResult<String> {
        let th: Thresholds = match thresholds {
            Some(s) => from_json(s)?,
            None => Thresholds::default(),
        };
        to_json(&py.detach(|| classify(&solution.inner, &self.inner, &th)).map_err(py_err)?)
    }

    /// Population Lloyd iterations from `init`; returns the trajectory as JSON.
    #[pyo3(signature = (init, max_iters = 500, tol = None, empty_cell_policy = "reseed_farthest"))]
    fn lloyd(
        &self,
        py: Python<'_>,
        init: &PySolution,
        max_iters: usize,
        tol: Option<f64>,
        empty_cell_policy: &str,
    ) -> PyResult<String> {
        let target = LloydTarget::Population(&self.inner);
        let log = run(py, &target, init, max_iters, tol, empty_cell_policy)?;
        to_json(&log)
    }

    /// Restart survey; `config` is a JSON object with at least `restarts` and `seed`.
    fn survey(&self, py: Python<'_>, config: &str) -> PyResult<String> {
        let cfg: survey::SurveyConfig = from_json(config)?;
        let (report, _) = py.detach(|| survey::survey(&self.inner, &cfg)).map_err(py_err)?;
        to_json(&report)
    }
}

fn run(
    py: Python<'_>,
    target: &LloydTarget,
    init: &PySolution,
    max_iters: usize,
    tol: Option<f64>,
    policy: &str,
) -> PyResult<kmeans_landscape::lloyd::TrajectoryLog> {
    let policy: EmptyCellPolicy = from_json(&format!("{policy:?}"))?;
    let mut cfg = LloydConfig::new(Init::Given { centers: init.inner.clone() }, target);
    cfg.max_iters = max_iters;
    if let Some(tol) = tol {
        cfg.tol = tol;
    }
    cfg.empty_cell_policy = policy;
    py.detach(|| run_lloyd(&cfg, target)).map_err(py_err)
}

/// Empirical Lloyd iterations on `points`; returns the trajectory as JSON.
#[pyfunction]
#[pyo3(signature = (points, init, max_iters = 500, tol = 1e-8, empty_cell_policy = "reseed_farthest"))]
fn lloyd_empirical(
    py: Python<'_>,
    points: Vec<Vec<f64>>,
    init: &PySolution,
    max_iters: usize,
    tol: f64,
    empty_cell_policy: &str,
) -> PyResult<String> {
    let data = SampleSet::from_points(points);
    let target = LloydTarget::Empirical(&data);
    to_json(&run(py, &target, init, max_iters, Some(tol), empty_cell_policy)?)
}

/// Sum of squared distances from each point to its closest center.
#[pyfunction]
fn empirical_objective_of(points: Vec<Vec<f64>>, solution: &PySolution) -> PyResult<f64> {
    empirical_objective(&solution.inner, &SampleSet::from_points(points)).map_err(py_err)
}

/// Run every verification certificate; returns a JSON list.
#[pyfunction]
fn verify_all(py: Python<'_>, seed: u64) -> PyResult<String> {
    to_json(&py.detach(|| verify::run_all(seed)).map_err(py_err)?)
}

/// Stationarity and Hessian certificate for the 1D three-ball spurious point.
#[pyfunction]
fn verify_spurious_1d(r: f64) -> PyResult<String> {
    to_json(&verify::verify_three_ball_spurious(r).map_err(py_err)?)
}

/// Certificate for the asymmetric 1D local minimum at radius `r`.
#[pyfunction]
fn verify_asymmetric_1d(r: f64) -> PyResult<String> {
    to_json(&verify::verify_asymmetric_minimum(r).map_err(py_err)?)
}

/// Certificate for the 2D overlapping-disc fixed point.
#[pyfunction]
#[pyo3(signature = (epsilon, n = 1_000_000, seed = 0))]
fn verify_disc_fixed_point(py: Python<'_>, epsilon: f64, n: usize, seed: u64) -> PyResult<String> {
    to_json(&py.detach(|| verify::verify_overlap_disc(epsilon, n, seed)).map_err(py_err)?)
}

#[pymodule]
fn kmeans_landscape_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    register(m)
}

/// Add every class and function to `m`.
pub fn register(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMixtureModel>()?;
    m.add_class::<PySolution>()?;
    m.add_class::<PyPopulation>()?;
    m.add_function(wrap_pyfunction!(lloyd_empirical, m)?)?;
    m.add_function(wrap_pyfunction!(empirical_objective_of, m)?)?;
    m.add_function(wrap_pyfunction!(verify_all, m)?)?;
    m.add_function(wrap_pyfunction!(verify_spurious_1d, m)?)?;
    m.add_function(wrap_pyfunction!(verify_asymmetric_1d, m)?)?;
    m.add_function(wrap_pyfunction!(verify_disc_fixed_point, m)?)?;
    Ok(())
}
