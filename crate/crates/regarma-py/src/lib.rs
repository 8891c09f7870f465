//! Python bindings: simulate datasets, fit penalized dynamic regressions,
//! select lag orders, and compute residual autocorrelations. Everything is
//! returned as plain dicts/lists so no Python-side dependencies are needed.
//!
//! Build with `cargo build -p regarma-py`; `python/smoke_test.py` shows how
//! to load the resulting shared library directly.

use ndarray::{Array1, Array2};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;
use regarma::{
    compute_metrics, default_grid, label_for_orders, lambda_max_for, residual_acf as acf_impl,
    select_orders_method_a, select_orders_method_b, select_penalties, standardize, Criterion,
    RegarmaError, SelectOptions, SelectionResult, SimulationConfig, StandardizationTransform,
    TimeSeriesDataset,
};

fn to_py_err(err: RegarmaError) -> PyErr {
    PyValueError::new_err(err.to_string())
}

fn to_dataset(y: Vec<f64>, x: Vec<Vec<f64>>) -> PyResult<TimeSeriesDataset> {
    let t_len = y.len();
    if x.len() != t_len {
        return Err(PyValueError::new_err(format!(
            "y has {t_len} rows but x has {}",
            x.len()
        )));
    }
    let r = x.first().map_or(0, |row| row.len());
    let mut arr = Array2::zeros((t_len, r));
    for (i, row) in x.iter().enumerate() {
        if row.len() != r {
            return Err(PyValueError::new_err(format!(
                "x row {i} has {} entries, expected {r}",
                row.len()
            )));
        }
        for (j, v) in row.iter().enumerate() {
            arr[[i, j]] = *v;
        }
    }
    let names = (1..=r).map(|j| format!("x{j}")).collect();
    TimeSeriesDataset::new(Array1::from(y), arr, names).map_err(to_py_err)
}

fn parse_criterion(name: &str) -> PyResult<Criterion> {
    match name {
        "bic" => Ok(Criterion::Bic),
        "aic" => Ok(Criterion::Aic),
        "cv" => Ok(Criterion::Cv),
        other => Err(PyValueError::new_err(format!(
            "unknown criterion '{other}' (expected bic, aic or cv)"
        ))),
    }
}

fn fit_dict<'py>(
    py: Python<'py>,
    sel: &SelectionResult,
    transform: &StandardizationTransform,
    adaptive: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let fit = &sel.best_fit;
    let report = compute_metrics(fit).map_err(to_py_err)?;
    let dict = PyDict::new(py);
    dict.set_item(
        "label",
        label_for_orders(adaptive, sel.best_orders.0, sel.best_orders.1),
    )?;
    dict.set_item("p", sel.best_orders.0)?;
    dict.set_item("q", sel.best_orders.1)?;
    dict.set_item("beta", fit.beta.clone())?;
    dict.set_item(
        "beta_original",
        transform.regression_coefs_to_original(&fit.beta),
    )?;
    dict.set_item("phi", fit.phi.clone())?;
    dict.set_item("theta", fit.theta.clone())?;
    dict.set_item("df", fit.df)?;
    dict.set_item("n", fit.n)?;
    dict.set_item("mse", report.mse)?;
    dict.set_item("bic", report.bic)?;
    dict.set_item("converged", fit.converged)?;
    dict.set_item("iterations", fit.iterations)?;
    dict.set_item("kkt_violation", fit.kkt_violation)?;
    let scales = PyDict::new(py);
    scales.set_item("lambda", sel.best_scales.lambda)?;
    scales.set_item("gamma", sel.best_scales.gamma)?;
    scales.set_item("tau", sel.best_scales.tau)?;
    dict.set_item("scales", scales)?;
    Ok(dict)
}

/// Simulated dataset plus the coefficients and noise paths it came from.
#[pyfunction]
#[pyo3(signature = (t_len, r, zero_prop, sigma, p, q, seed))]
fn simulate(
    py: Python<'_>,
    t_len: usize,
    r: usize,
    zero_prop: f64,
    sigma: f64,
    p: usize,
    q: usize,
    seed: u64,
) -> PyResult<Py<PyDict>> {
    let cfg = SimulationConfig::new(t_len, r, zero_prop, sigma, p, q, seed);
    let (ds, truth) = regarma::generate_dataset(&cfg).map_err(to_py_err)?;
    let dict = PyDict::new(py);
    dict.set_item("y", ds.y.to_vec())?;
    let rows: Vec<Vec<f64>> = (0..ds.t_len())
        .map(|t| (0..ds.n_regressors()).map(|j| ds.x[[t, j]]).collect())
        .collect();
    dict.set_item("x", rows)?;
    dict.set_item("names", ds.column_names.clone())?;
    dict.set_item("beta0", truth.beta0)?;
    dict.set_item("phi0", truth.phi0)?;
    dict.set_item("theta0", truth.theta0)?;
    dict.set_item("sigma", truth.sigma)?;
    dict.set_item("errors", truth.errors)?;
    Ok(dict.unbind())
}

/// Standardize, pick penalties on a log-spaced grid by the given criterion,
/// and return the winning fit at lag orders (p, q).
#[pyfunction]
#[pyo3(signature = (y, x, p=0, q=0, adaptive=true, criterion="bic", grid_points=15, folds=5))]
#[allow(clippy::too_many_arguments)]
fn fit(
    py: Python<'_>,
    y: Vec<f64>,
    x: Vec<Vec<f64>>,
    p: usize,
    q: usize,
    adaptive: bool,
    criterion: &str,
    grid_points: usize,
    folds: usize,
) -> PyResult<Py<PyDict>> {
    let ds = to_dataset(y, x)?;
    let (std_ds, transform) = standardize(&ds).map_err(to_py_err)?;
    let kind = parse_criterion(criterion)?;
    let opts = SelectOptions {
        adaptive,
        folds,
        ..SelectOptions::default()
    };
    let grid = default_grid(lambda_max_for(&std_ds, p, q).map_err(to_py_err)?, grid_points);
    let sel = select_penalties(&std_ds, p, q, &grid, kind, &opts).map_err(to_py_err)?;
    Ok(fit_dict(py, &sel, &transform, adaptive)?.unbind())
}

/// Order selection up to (pmax, qmax): method "a" searches every sub-order
/// pair, method "b" reads surviving lags off one maximal-order fit.
#[pyfunction]
#[pyo3(signature = (y, x, pmax, qmax, method="b", adaptive=true, criterion="bic", grid_points=15, folds=5))]
#[allow(clippy::too_many_arguments)]
fn select_orders(
    py: Python<'_>,
    y: Vec<f64>,
    x: Vec<Vec<f64>>,
    pmax: usize,
    qmax: usize,
    method: &str,
    adaptive: bool,
    criterion: &str,
    grid_points: usize,
    folds: usize,
) -> PyResult<Py<PyDict>> {
    let ds = to_dataset(y, x)?;
    let (std_ds, transform) = standardize(&ds).map_err(to_py_err)?;
    let kind = parse_criterion(criterion)?;
    let opts = SelectOptions {
        adaptive,
        folds,
        ..SelectOptions::default()
    };
    let grid = default_grid(
        lambda_max_for(&std_ds, pmax, qmax).map_err(to_py_err)?,
        grid_points,
    );
    let sel = match method {
        "a" => select_orders_method_a(&std_ds, pmax, qmax, &grid, kind, &opts),
        "b" => select_orders_method_b(&std_ds, pmax, qmax, &grid, kind, &opts),
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown order-selection method '{other}' (expected a or b)"
            )))
        }
    }
    .map_err(to_py_err)?;
    Ok(fit_dict(py, &sel, &transform, adaptive)?.unbind())
}

/// Sample autocorrelations at lags 1..=max_lag.
#[pyfunction]
#[pyo3(signature = (series, max_lag))]
fn residual_acf(series: Vec<f64>, max_lag: usize) -> PyResult<Vec<f64>> {
    acf_impl(&series, max_lag).map_err(to_py_err)
}

#[pymodule]
fn regarma_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(select_orders, m)?)?;
    m.add_function(wrap_pyfunction!(residual_acf, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
