//! Python bindings for the `thetafem` library.

use std::collections::HashMap;
use std::path::PathBuf;

use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use ::thetafem::error::Error;
use ::thetafem::estimators::{self, ReportRow};
use ::thetafem::mesh;
use ::thetafem::report::{self, Format, VariantFilter};
use ::thetafem::scheme;
use ::thetafem::solver::SolverConfig;
use ::thetafem::study::{self, CheckPolicy, RunConfig, RunReport};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Config(_) | Error::Usage(_) => PyValueError::new_err(e.to_string()),
        Error::Io(_) => PyOSError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn row_dict(row: &ReportRow) -> HashMap<String, f64> {
    ReportRow::HEADER
        .iter()
        .skip(1)
        .zip(row.values())
        .map(|(k, v)| (k.to_string(), v))
        .chain(std::iter::once(("m".to_string(), row.m as f64)))
        .collect()
}

/// Uniform triangulation of the unit square with `2^level` cells per side.
#[pyclass(name = "Mesh", frozen)]
struct PyMesh(mesh::Mesh);

#[pymethods]
impl PyMesh {
    #[new]
    fn new(level: u32) -> PyResult<Self> {
        mesh::build_uniform_mesh(level).map(PyMesh).map_err(to_py)
    }

    #[getter]
    fn level(&self) -> u32 {
        self.0.level()
    }

    #[getter]
    fn h(&self) -> f64 {
        self.0.spacing()
    }

    #[getter]
    fn max_diameter(&self) -> f64 {
        self.0.max_diameter()
    }

    #[getter]
    fn n_vertices(&self) -> usize {
        self.0.vertices().len()
    }

    #[getter]
    fn n_triangles(&self) -> usize {
        self.0.triangles().len()
    }

    #[getter]
    fn n_dofs(&self) -> usize {
        self.0.n_dofs()
    }

    #[getter]
    fn n_interior_facets(&self) -> usize {
        self.0.interior_facets().len()
    }

    #[getter]
    fn n_boundary_facets(&self) -> usize {
        self.0.boundary_facets().len()
    }

    fn vertices(&self) -> Vec<(f64, f64)> {
        self.0.vertices().iter().map(|p| (p[0], p[1])).collect()
    }

    fn triangles(&self) -> Vec<(usize, usize, usize)> {
        self.0.triangles().iter().map(|t| (t[0], t[1], t[2])).collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Mesh(level={}, vertices={}, triangles={})",
            self.0.level(),
            self.0.vertices().len(),
            self.0.triangles().len()
        )
    }
}

/// Results of one level of a convergence study.
#[pyclass(name = "Run", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyRun(RunReport);

#[pymethods]
impl PyRun {
    #[getter]
    fn case_id(&self) -> u32 {
        self.0.case_id
    }

    #[getter]
    fn level(&self) -> u32 {
        self.0.level
    }

    #[getter]
    fn h(&self) -> f64 {
        self.0.h
    }

    #[getter]
    fn k(&self) -> f64 {
        self.0.k
    }

    #[getter]
    fn n_steps(&self) -> usize {
        self.0.n_steps
    }

    #[getter]
    fn max_error(&self) -> f64 {
        self.0.max_error
    }

    #[getter]
    fn e_total(&self) -> f64 {
        self.0.e_total
    }

    #[getter]
    fn effectivity_two(&self) -> f64 {
        self.0.effectivity_two
    }

    #[getter]
    fn effectivity_three(&self) -> f64 {
        self.0.effectivity_three
    }

    #[getter]
    fn max_compact_residual(&self) -> f64 {
        self.0.max_compact_residual
    }

    #[getter]
    fn initial_error(&self) -> f64 {
        self.0.estimators.initial_error
    }

    /// Accumulated estimators at the final time, keyed by column name.
    fn final_estimators(&self) -> HashMap<String, f64> {
        row_dict(self.0.final_row())
    }

    /// One dict per time step.
    fn history(&self) -> Vec<HashMap<String, f64>> {
        self.0.estimators.rows.iter().map(row_dict).collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Run(case={}, level={}, max_error={}, bound_two={})",
            self.0.case_id,
            self.0.level,
            report::sci(self.0.max_error),
            report::sci(self.0.final_row().bound_two)
        )
    }
}

fn config(
    theta: Option<f64>,
    alpha1: Option<f64>,
    alpha2: Option<f64>,
    constants: Option<HashMap<String, f64>>,
    solver_tol: f64,
) -> PyResult<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(t) = theta {
        cfg.theta = t;
        cfg.alpha1 = scheme::glowinski_alpha(t);
        cfg.alpha2 = cfg.alpha1;
    }
    cfg.alpha1 = alpha1.unwrap_or(cfg.alpha1);
    cfg.alpha2 = alpha2.unwrap_or(cfg.alpha2);
    for (name, v) in constants.unwrap_or_default() {
        cfg.constants.set(&name, v).map_err(to_py)?;
    }
    cfg.solver = SolverConfig::with_tolerance(solver_tol).map_err(to_py)?;
    Ok(cfg)
}

/// Runs one level of the manufactured-solution study.
#[pyfunction]
#[pyo3(signature = (case, level, *, theta=None, alpha1=None, alpha2=None, constants=None, solver_tol=1e-12))]
fn run_level(
    py: Python<'_>,
    case: u32,
    level: u32,
    theta: Option<f64>,
    alpha1: Option<f64>,
    alpha2: Option<f64>,
    constants: Option<HashMap<String, f64>>,
    solver_tol: f64,
) -> PyResult<PyRun> {
    let cfg = config(theta, alpha1, alpha2, constants, solver_tol)?;
    let case = study::make_case(case).map_err(to_py)?;
    py.detach(|| study::run_level(&case, level, &cfg)).map(PyRun).map_err(to_py)
}

/// Runs levels `"A:B"` and returns one `Run` per level.
#[pyfunction]
#[pyo3(signature = (case, levels, *, theta=None, alpha1=None, alpha2=None, constants=None, solver_tol=1e-12))]
fn run_study(
    py: Python<'_>,
    case: u32,
    levels: &str,
    theta: Option<f64>,
    alpha1: Option<f64>,
    alpha2: Option<f64>,
    constants: Option<HashMap<String, f64>>,
    solver_tol: f64,
) -> PyResult<Vec<PyRun>> {
    let cfg = config(theta, alpha1, alpha2, constants, solver_tol)?;
    let case = study::make_case(case).map_err(to_py)?;
    let levels = study::parse_levels(levels).map_err(to_py)?;
    let runs = py
        .detach(|| study::run_study(&case, levels, &cfg, |_| Ok(())))
        .map_err(to_py)?;
    Ok(runs.into_iter().map(PyRun).collect())
}

fn unwrap_runs(runs: Vec<PyRef<'_, PyRun>>) -> Vec<RunReport> {
    runs.iter().map(|r| r.0.clone()).collect()
}

/// Convergence and reliability checks; returns `(name, passed, detail)` tuples.
#[pyfunction]
fn checks(runs: Vec<PyRef<'_, PyRun>>) -> PyResult<Vec<(String, bool, String)>> {
    let runs = unwrap_runs(runs);
    let case = runs
        .first()
        .map(|r| r.case_id)
        .ok_or_else(|| PyValueError::new_err("no runs"))?;
    Ok(study::study_checks(&runs, &CheckPolicy::for_case(case))
        .into_iter()
        .map(|c| (c.name, c.passed, c.detail))
        .collect())
}

/// Writes the summary tables and per-level histories; returns the paths.
#[pyfunction]
#[pyo3(signature = (runs, out, format="csv", variant="both"))]
fn write_tables(runs: Vec<PyRef<'_, PyRun>>, out: PathBuf, format: &str, variant: &str) -> PyResult<Vec<PathBuf>> {
    let format = match format {
        "csv" => Format::Csv,
        "md" => Format::Markdown,
        f => return Err(PyValueError::new_err(format!("unknown format {f:?}"))),
    };
    let variant = match variant {
        "two" => VariantFilter::Two,
        "three" => VariantFilter::Three,
        "both" => VariantFilter::Both,
        v => return Err(PyValueError::new_err(format!("unknown variant {v:?}"))),
    };
    report::emit(&unwrap_runs(runs), format, variant, &out).map_err(to_py)
}

#[pyfunction]
fn eoc(values: Vec<f64>, h: Vec<f64>) -> PyResult<Vec<f64>> {
    study::eoc(&values, &h).map_err(to_py)
}

#[pyfunction]
fn default_theta() -> f64 {
    scheme::default_theta()
}

#[pyfunction]
fn glowinski_alpha(theta: f64) -> f64 {
    scheme::glowinski_alpha(theta)
}

/// Largest defect of the four-point correction rule on linear polynomials.
#[pyfunction]
fn quadrature_exactness_check(theta: f64, alpha: f64) -> f64 {
    estimators::quadrature_exactness_check(theta, alpha)
}

#[pyfunction]
fn sci(v: f64) -> String {
    report::sci(v)
}

#[pymodule]
pub fn thetafem(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMesh>()?;
    m.add_class::<PyRun>()?;
    m.add_function(wrap_pyfunction!(run_level, m)?)?;
    m.add_function(wrap_pyfunction!(run_study, m)?)?;
    m.add_function(wrap_pyfunction!(checks, m)?)?;
    m.add_function(wrap_pyfunction!(write_tables, m)?)?;
    m.add_function(wrap_pyfunction!(eoc, m)?)?;
    m.add_function(wrap_pyfunction!(default_theta, m)?)?;
    m.add_function(wrap_pyfunction!(glowinski_alpha, m)?)?;
    m.add_function(wrap_pyfunction!(quadrature_exactness_check, m)?)?;
    m.add_function(wrap_pyfunction!(sci, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
