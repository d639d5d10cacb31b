//! Python module `lcmq`: kernels, node clouds, fixed-cloud solves, shape
//! sweeps and the adaptive driver.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use lcmq::problems::{self, sensitivity_ratio};
use lcmq::{Error, Operator};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidArgument(msg) => PyValueError::new_err(msg),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn point(coords: &[f64]) -> PyResult<lcmq::Point> {
    lcmq::Point::from_slice(coords).map_err(to_py)
}

fn operator(name: &str) -> PyResult<Operator> {
    match name {
        "identity" => Ok(Operator::Identity),
        "laplacian" => Ok(Operator::Laplacian),
        other => Err(PyValueError::new_err(format!("unknown operator {other:?}"))),
    }
}

#[pyclass(name = "KernelSpec", module = "lcmq", frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
struct PyKernelSpec {
    inner: lcmq::KernelSpec,
}

#[pymethods]
impl PyKernelSpec {
    #[new]
    #[pyo3(signature = (family = "cmq", shape = 0.8))]
    fn new(family: &str, shape: f64) -> PyResult<Self> {
        let family: lcmq::KernelFamily = family.parse().map_err(to_py)?;
        Ok(Self { inner: lcmq::KernelSpec::new(family, shape).map_err(to_py)? })
    }

    #[getter]
    fn family(&self) -> String {
        self.inner.family().to_string()
    }

    #[getter]
    fn shape(&self) -> f64 {
        self.inner.shape()
    }

    fn value(&self, r: f64) -> f64 {
        lcmq::kernel_value(self.inner, r)
    }

    fn laplacian(&self, r: f64, dim: usize) -> f64 {
        lcmq::kernel_laplacian(self.inner, r, dim)
    }

    fn __repr__(&self) -> String {
        format!("KernelSpec({:?}, {})", self.inner.family().to_string(), self.inner.shape())
    }
}

#[pyclass(name = "Problem", module = "lcmq", frozen, skip_from_py_object)]
struct PyProblem {
    inner: lcmq::ProblemSpec,
}

#[pymethods]
impl PyProblem {
    #[staticmethod]
    fn example1() -> Self {
        Self { inner: lcmq::example1() }
    }

    #[staticmethod]
    fn example2() -> Self {
        Self { inner: lcmq::example2() }
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn rhs(&self, coords: Vec<f64>) -> PyResult<f64> {
        Ok((self.inner.rhs)(&point(&coords)?))
    }

    fn exact(&self, coords: Vec<f64>) -> PyResult<Option<f64>> {
        let p = point(&coords)?;
        Ok(self.inner.exact.as_ref().map(|u| u(&p)))
    }

    /// Uniform lattice over the problem domain with `per_axis` nodes per axis.
    fn lattice(&self, per_axis: Vec<usize>, cover_size: usize) -> PyResult<PyNodeCloud> {
        let inner = lcmq::NodeCloud::lattice(&self.inner.domain, &per_axis, cover_size).map_err(to_py)?;
        Ok(PyNodeCloud { inner })
    }

    /// Cloud from explicit coordinates; boundary flags come from the domain.
    fn cloud(&self, points: Vec<Vec<f64>>, cover_size: usize) -> PyResult<PyNodeCloud> {
        let pts = points.iter().map(|c| point(c)).collect::<PyResult<Vec<_>>>()?;
        let inner = lcmq::NodeCloud::new(&self.inner.domain, pts, cover_size).map_err(to_py)?;
        Ok(PyNodeCloud { inner })
    }

    fn __repr__(&self) -> String {
        format!("Problem({:?})", self.inner.name)
    }
}

#[pyclass(name = "NodeCloud", module = "lcmq", skip_from_py_object)]
#[derive(Clone)]
struct PyNodeCloud {
    inner: lcmq::NodeCloud,
}

#[pymethods]
impl PyNodeCloud {
    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn points(&self) -> Vec<Vec<f64>> {
        self.inner.points().iter().map(|p| p.coords().to_vec()).collect()
    }

    #[getter]
    fn cover_sizes(&self) -> Vec<usize> {
        self.inner.cover_sizes().to_vec()
    }

    #[getter]
    fn boundary(&self) -> Vec<bool> {
        self.inner.boundary_flags().to_vec()
    }

    fn set_cover_size(&mut self, i: usize, size: usize) -> PyResult<()> {
        self.inner.set_cover_size(i, size).map_err(to_py)
    }

    /// Indices of the `k` nearest nodes to `coords`, nearest first.
    fn knn(&self, coords: Vec<f64>, k: usize) -> PyResult<Vec<usize>> {
        lcmq::knn(&self.inner, &point(&coords)?, k).map_err(to_py)
    }

    /// `op u_h` at `coords` using the nearest node's cover.
    #[pyo3(signature = (values, kernel, coords, op = "identity", cover_size = None))]
    fn evaluate(
        &self,
        values: Vec<f64>,
        kernel: &PyKernelSpec,
        coords: Vec<f64>,
        op: &str,
        cover_size: Option<usize>,
    ) -> PyResult<f64> {
        lcmq::evaluate_field(&self.inner, &values, kernel.inner, operator(op)?, &point(&coords)?, cover_size)
            .map_err(to_py)
    }

    /// Shape weights of node `center`'s cover at `coords`, as `(members, weights)`.
    #[pyo3(signature = (center, kernel, coords, op = "identity"))]
    fn weights(&self, center: usize, kernel: &PyKernelSpec, coords: Vec<f64>, op: &str) -> PyResult<(Vec<usize>, Vec<f64>)> {
        let cover = lcmq::build_cover(&self.inner, kernel.inner, center).map_err(to_py)?;
        let w = cover.operator_weights(operator(op)?, &point(&coords)?);
        Ok((cover.members().to_vec(), w.0))
    }

    fn __repr__(&self) -> String {
        format!("NodeCloud(len={}, dim={})", self.inner.len(), self.inner.dim())
    }
}

#[pyclass(name = "AdaptiveConfig", module = "lcmq", get_all, set_all, skip_from_py_object)]
#[derive(Clone)]
struct PyAdaptiveConfig {
    c_min: usize,
    c_max: usize,
    tau: f64,
    max_splits: usize,
    theta: f64,
    delta_p: usize,
    rho: f64,
    epsilon: f64,
    max_cycles: usize,
    node_cap: usize,
    min_insert_spacing: Option<f64>,
    cells_per_axis: Vec<usize>,
    probe_per_axis: usize,
}

impl PyAdaptiveConfig {
    fn to_core(&self) -> lcmq::AdaptiveConfig {
        lcmq::AdaptiveConfig {
            c_min: self.c_min,
            c_max: self.c_max,
            tau: self.tau,
            max_splits: self.max_splits,
            theta: self.theta,
            delta_p: self.delta_p,
            rho: self.rho,
            epsilon: self.epsilon,
            max_cycles: self.max_cycles,
            node_cap: self.node_cap,
            min_insert_spacing: self.min_insert_spacing,
            cells_per_axis: self.cells_per_axis.clone(),
            probe_per_axis: self.probe_per_axis,
        }
    }
}

#[pymethods]
impl PyAdaptiveConfig {
    /// Defaults for a `dim`-dimensional run starting from `nodes` nodes.
    #[new]
    fn new(dim: usize, nodes: usize) -> Self {
        let c = lcmq::AdaptiveConfig::defaults(dim, nodes);
        Self {
            c_min: c.c_min,
            c_max: c.c_max,
            tau: c.tau,
            max_splits: c.max_splits,
            theta: c.theta,
            delta_p: c.delta_p,
            rho: c.rho,
            epsilon: c.epsilon,
            max_cycles: c.max_cycles,
            node_cap: c.node_cap,
            min_insert_spacing: c.min_insert_spacing,
            cells_per_axis: c.cells_per_axis,
            probe_per_axis: c.probe_per_axis,
        }
    }

    fn validate(&self) -> PyResult<()> {
        self.to_core().validate().map_err(to_py)
    }
}

#[pyclass(name = "AdaptiveRun", module = "lcmq", frozen, skip_from_py_object)]
struct PyAdaptiveRun {
    records: Vec<lcmq::CycleRecord>,
    #[pyo3(get)]
    cloud: Py<PyNodeCloud>,
    #[pyo3(get)]
    nodal_values: Vec<f64>,
    #[pyo3(get)]
    termination: String,
    #[pyo3(get)]
    converged: bool,
}

#[pymethods]
impl PyAdaptiveRun {
    /// One dict per cycle with the columns of `cycles.csv`.
    #[getter]
    fn records<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.records
            .iter()
            .map(|r| {
                let d = PyDict::new(py);
                d.set_item("cycle", r.cycle)?;
                d.set_item("nodes", r.node_count)?;
                d.set_item("max_cover", r.max_cover)?;
                d.set_item("rmse", r.rmse)?;
                d.set_item("max_abs_error", r.max_abs_error)?;
                d.set_item("max_indicator", r.max_indicator)?;
                d.set_item("action", r.action.to_string())?;
                d.set_item("solve_s", r.solve_seconds)?;
                d.set_item("adapt_s", r.adapt_seconds)?;
                Ok(d)
            })
            .collect()
    }

    fn __repr__(&self) -> String {
        format!("AdaptiveRun(cycles={}, termination={:?})", self.records.len(), self.termination)
    }
}

/// Non-adaptive solve; returns `(nodal_values, rmse, max_abs_error)`.
#[pyfunction]
#[pyo3(signature = (problem, cloud, kernel, probe_per_axis = 101))]
fn solve_fixed(
    py: Python<'_>,
    problem: &PyProblem,
    cloud: &PyNodeCloud,
    kernel: &PyKernelSpec,
    probe_per_axis: usize,
) -> PyResult<(Vec<f64>, f64, f64)> {
    let probes = lcmq::uniform_probe_set(&problem.inner.domain, probe_per_axis).map_err(to_py)?;
    let (solution, report) = py
        .detach(|| problems::solve_and_measure(&problem.inner, &cloud.inner, kernel.inner, &probes))
        .map_err(to_py)?;
    Ok((solution.nodal_values, report.rmse, report.max_abs))
}

/// Fixed-cloud sweep; returns `(family, c, rmse, max_abs_error)` tuples with
/// failed solves reported as infinite errors.
#[pyfunction]
#[pyo3(signature = (problem, cloud, shapes, families, probe_per_axis = 1001))]
fn shape_sweep(
    py: Python<'_>,
    problem: &PyProblem,
    cloud: &PyNodeCloud,
    shapes: Vec<f64>,
    families: Vec<String>,
    probe_per_axis: usize,
) -> PyResult<Vec<(String, f64, f64, f64)>> {
    let families = families
        .iter()
        .map(|f| f.parse::<lcmq::KernelFamily>())
        .collect::<lcmq::Result<Vec<_>>>()
        .map_err(to_py)?;
    let probes = lcmq::uniform_probe_set(&problem.inner.domain, probe_per_axis).map_err(to_py)?;
    let rows = py
        .detach(|| lcmq::shape_sweep(&problem.inner, &cloud.inner, &shapes, &families, &probes))
        .map_err(to_py)?;
    Ok(rows.iter().map(|r| (r.family.to_string(), r.shape, r.rmse(), r.max_abs())).collect())
}

/// `max(rmse) / min(rmse)` over sweep tuples.
#[pyfunction]
fn sensitivity(rows: Vec<(String, f64, f64, f64)>) -> f64 {
    let rows: Vec<lcmq::SweepRow> = rows
        .into_iter()
        .map(|(_, shape, rmse, max_abs)| lcmq::SweepRow {
            family: lcmq::KernelFamily::Cmq,
            shape,
            report: rmse.is_finite().then_some(lcmq::ErrorReport { rmse, max_abs, probe_count: 0 }),
            failure: None,
        })
        .collect();
    sensitivity_ratio(&rows)
}

#[pyfunction]
fn run_adaptive(
    py: Python<'_>,
    problem: &PyProblem,
    cloud: &PyNodeCloud,
    kernel: &PyKernelSpec,
    config: &PyAdaptiveConfig,
) -> PyResult<PyAdaptiveRun> {
    let config = config.to_core();
    let run = py
        .detach(|| lcmq::run_adaptive(&problem.inner, &cloud.inner, kernel.inner, &config))
        .map_err(to_py)?;
    Ok(PyAdaptiveRun {
        termination: run.termination.to_string(),
        converged: run.termination.converged(),
        records: run.records,
        nodal_values: run.solution.nodal_values,
        cloud: Py::new(py, PyNodeCloud { inner: run.cloud })?,
    })
}

#[pymodule]
#[pyo3(name = "lcmq")]
fn lcmq_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyKernelSpec>()?;
    m.add_class::<PyProblem>()?;
    m.add_class::<PyNodeCloud>()?;
    m.add_class::<PyAdaptiveConfig>()?;
    m.add_class::<PyAdaptiveRun>()?;
    m.add_function(wrap_pyfunction!(solve_fixed, m)?)?;
    m.add_function(wrap_pyfunction!(shape_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(sensitivity, m)?)?;
    m.add_function(wrap_pyfunction!(run_adaptive, m)?)?;
    Ok(())
}
