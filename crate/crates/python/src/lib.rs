use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use ballspace::functionals::{
    self, bbm_limit_extrapolate, bbm_sweep, default_lambda_grid, BsvyParams, KernelPolicy, DEFAULT_S_GRID,
};
use ballspace::harness::{self, ExperimentConfig, ExperimentKind};
use ballspace::spaces::{self, SpaceSpec};
use ballspace::weights::{self, CubeFamily, WeightSpec};
use ballspace::{mask, DomainMask, DomainSpec, Grid, SampledField, TestFunctionSpec};

fn err(e: ballspace::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn setup(grid: &str, domain: &str) -> PyResult<(Grid, DomainMask)> {
    let g = Grid::parse(grid).map_err(err)?;
    let om = mask(&DomainSpec::parse(domain).map_err(err)?, &g).map_err(err)?;
    Ok((g, om))
}

fn sample(function: &str, grid: &Grid) -> PyResult<SampledField> {
    TestFunctionSpec::parse(function).and_then(|f| f.sample(grid)).map_err(err)
}

/// Norm of a test function in `space` restricted to `domain`.
#[pyfunction]
#[pyo3(signature = (function, space, grid, domain = "full"))]
fn norm(function: &str, space: &str, grid: &str, domain: &str) -> PyResult<f64> {
    let (g, om) = setup(grid, domain)?;
    let x = SpaceSpec::parse(space).map_err(err)?;
    spaces::norm(&sample(function, &g)?, &x, &om).map_err(err)
}

/// Norm of explicit cell values (axis 0 fastest).
#[pyfunction]
#[pyo3(signature = (values, space, grid, domain = "full"))]
fn norm_values(values: Vec<f64>, space: &str, grid: &str, domain: &str) -> PyResult<f64> {
    let (g, om) = setup(grid, domain)?;
    let f = SampledField::new(g, values).map_err(err)?;
    spaces::norm(&f, &SpaceSpec::parse(space).map_err(err)?, &om).map_err(err)
}

/// `‖ |∇f| ‖` in `space` restricted to `domain`.
#[pyfunction]
#[pyo3(signature = (function, space, grid, domain = "full"))]
fn sobolev_norm(function: &str, space: &str, grid: &str, domain: &str) -> PyResult<f64> {
    let (g, om) = setup(grid, domain)?;
    let x = SpaceSpec::parse(space).map_err(err)?;
    functionals::sobolev_norm(&sample(function, &g)?, &x, &om).map_err(err)
}

#[pyfunction]
fn bbm_constant(p: f64, n: usize) -> PyResult<f64> {
    functionals::bbm_constant(p, n).map_err(err)
}

/// Extrapolated `s → 1` limit as `(limit, slope, residual, reference)`.
#[pyfunction]
#[pyo3(signature = (function, space, grid, p, domain = "full"))]
fn bbm_limit(function: &str, space: &str, grid: &str, p: f64, domain: &str) -> PyResult<(f64, f64, f64, f64)> {
    let (g, om) = setup(grid, domain)?;
    let f = sample(function, &g)?;
    let x = SpaceSpec::parse(space).map_err(err)?;
    let sweep = bbm_sweep(&f, p, &DEFAULT_S_GRID, &x, &om, KernelPolicy::equivalent_ball()).map_err(err)?;
    let ex = bbm_limit_extrapolate(&sweep).map_err(err)?;
    let k = functionals::bbm_constant(p, g.dim()).map_err(err)?;
    let reference = k.powf(1.0 / p) * functionals::sobolev_norm(&f, &x, &om).map_err(err)?;
    Ok((ex.limit, ex.slope, ex.residual, reference))
}

/// Supremum over λ of the level-set functional as `(value, argmax, reference)`.
#[pyfunction]
#[pyo3(signature = (function, space, grid, gamma, p, domain = "full", policy = None))]
fn bsvy_sup(
    function: &str,
    space: &str,
    grid: &str,
    gamma: f64,
    p: f64,
    domain: &str,
    policy: Option<&str>,
) -> PyResult<(f64, f64, f64)> {
    let (g, om) = setup(grid, domain)?;
    let f = sample(function, &g)?;
    let x = SpaceSpec::parse(space).map_err(err)?;
    let policy = match policy {
        Some(text) => KernelPolicy::parse(text).map_err(err)?,
        None => KernelPolicy::default_for(gamma),
    };
    let scale = om.restrict(&f.gradient_magnitude().map_err(err)?).map_err(err)?.max_abs();
    let params = BsvyParams::new(gamma, p, default_lambda_grid(scale.max(f64::MIN_POSITIVE))).map_err(err)?;
    let report = functionals::bsvy_sup(&f, &params, &x, &om, policy).map_err(err)?;
    let reference = functionals::sobolev_norm(&f, &x, &om).map_err(err)?;
    Ok((report.value, report.argmax, reference))
}

/// `[w]_{A_p}` over the standard cube family of the grid.
#[pyfunction]
fn ap_constant(weight: &str, grid: &str, p: f64) -> PyResult<f64> {
    let g = Grid::parse(grid).map_err(err)?;
    let w = WeightSpec::parse(weight).and_then(|w| w.sample(&g)).map_err(err)?;
    let family = CubeFamily::standard(&g, &[]).map_err(err)?;
    Ok(weights::muckenhoupt_constant(&w, p, &family).map_err(err)?.value)
}

/// Centered maximal function of cell values over dyadic radii.
#[pyfunction]
fn maximal(values: Vec<f64>, grid: &str) -> PyResult<Vec<f64>> {
    let g = Grid::parse(grid).map_err(err)?;
    let radii = weights::dyadic_radii(&g);
    let f = SampledField::new(g, values).map_err(err)?;
    Ok(weights::hl_maximal(&f, &radii).map_err(err)?.values().to_vec())
}

/// Runs an experiment and returns its report as JSON.
#[pyfunction]
#[pyo3(signature = (kind, config = None, seed = None))]
fn run_experiment(kind: &str, config: Option<&str>, seed: Option<u64>) -> PyResult<String> {
    let kind: ExperimentKind = kind.parse().map_err(err)?;
    let mut cfg = match config {
        Some(text) => ExperimentConfig::parse(text).map_err(err)?,
        None => ExperimentConfig::defaults(kind),
    };
    if cfg.kind != kind {
        return Err(PyValueError::new_err(format!("config kind `{}` does not match `{kind}`", cfg.kind)));
    }
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    harness::run_experiment(&cfg).and_then(|t| t.to_json()).map_err(err)
}

/// Acceptance criteria as `(id, title, passed, detail)`.
#[pyfunction]
#[pyo3(signature = (criteria = None, seed = 0))]
fn verify(criteria: Option<Vec<usize>>, seed: u64) -> Vec<(usize, String, bool, String)> {
    let ids = criteria.unwrap_or_else(|| harness::CRITERIA.iter().map(|c| c.0).collect());
    ids.into_iter()
        .map(|id| {
            let o = harness::run_criterion(id, seed);
            (o.id, o.title, o.passed, o.detail)
        })
        .collect()
}

#[pymodule]
pub fn pyballspace(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(norm, m)?)?;
    m.add_function(wrap_pyfunction!(norm_values, m)?)?;
    m.add_function(wrap_pyfunction!(sobolev_norm, m)?)?;
    m.add_function(wrap_pyfunction!(bbm_constant, m)?)?;
    m.add_function(wrap_pyfunction!(bbm_limit, m)?)?;
    m.add_function(wrap_pyfunction!(bsvy_sup, m)?)?;
    m.add_function(wrap_pyfunction!(ap_constant, m)?)?;
    m.add_function(wrap_pyfunction!(maximal, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
