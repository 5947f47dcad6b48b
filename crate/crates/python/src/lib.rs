//! Python bindings. Structured results come back as plain dicts.

use std::sync::Arc;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use fracmarket::arbitrage as arb;
use fracmarket::asymptotics as asy;
use fracmarket::kernels::{self, Coefficients};
use fracmarket::market::{self, PathWord};
use fracmarket::strategies::{self as strat, Horizon};
use fracmarket::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(_) | Error::Csv(_) | Error::Json(_) | Error::Quadrature { .. } => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

trait OrPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for fracmarket::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

fn to_py<'py>(py: Python<'py>, value: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn path(s: &str) -> PyResult<PathWord> {
    s.parse().py()
}

#[pyclass(name = "HurstParams", frozen)]
struct PyHurstParams(kernels::HurstParams);

#[pymethods]
impl PyHurstParams {
    #[new]
    #[pyo3(signature = (hurst, sigma=1.0))]
    fn new(hurst: f64, sigma: f64) -> PyResult<Self> {
        Ok(PyHurstParams(kernels::HurstParams::new(hurst, sigma).py()?))
    }

    #[getter]
    fn hurst(&self) -> f64 {
        self.0.hurst()
    }

    #[getter]
    fn sigma(&self) -> f64 {
        self.0.sigma()
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.0.alpha()
    }

    #[getter]
    fn c_h(&self) -> f64 {
        self.0.c_h()
    }

    /// `c_H`, `c_star`, `g_limit` and `c_X` as a dict.
    fn constants<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.0.constants())
    }

    fn __repr__(&self) -> String {
        format!("HurstParams(hurst={}, sigma={})", self.0.hurst(), self.0.sigma())
    }
}

/// Coefficients `j_n(i)` and `g_n`, either a dense table or computed on demand.
#[pyclass(name = "Coefficients", frozen)]
struct PyCoefficients {
    inner: Arc<dyn Coefficients>,
    table: Option<Arc<kernels::CoeffTable>>,
}

#[pymethods]
impl PyCoefficients {
    /// Dense table for levels up to `n_max`.
    #[staticmethod]
    #[pyo3(signature = (params, n_max, quad_tol=1e-10))]
    fn table(py: Python<'_>, params: &PyHurstParams, n_max: usize, quad_tol: f64) -> PyResult<Self> {
        let p = params.0;
        let t = Arc::new(py.detach(|| kernels::build_coeff_table(p, n_max, quad_tol)).py()?);
        Ok(PyCoefficients { inner: t.clone(), table: Some(t) })
    }

    /// Quadrature on demand, without a depth limit.
    #[staticmethod]
    #[pyo3(signature = (params, quad_tol=1e-10))]
    fn direct(params: &PyHurstParams, quad_tol: f64) -> PyResult<Self> {
        Ok(PyCoefficients { inner: Arc::new(kernels::DirectKernel::new(params.0, quad_tol).py()?), table: None })
    }

    #[getter]
    fn depth(&self) -> Option<usize> {
        self.inner.depth()
    }

    #[getter]
    fn params(&self) -> PyHurstParams {
        PyHurstParams(*self.inner.params())
    }

    fn j(&self, n: usize, i: usize) -> PyResult<f64> {
        self.inner.j(n, i).py()
    }

    fn g(&self, n: usize) -> PyResult<f64> {
        self.inner.g(n).py()
    }

    fn row(&self, n: usize) -> PyResult<Vec<f64>> {
        self.inner.row(n).py()
    }

    fn row_sum(&self, n: usize, lo: usize, hi: usize) -> PyResult<f64> {
        self.inner.row_sum(n, lo, hi).py()
    }

    /// `Y_n` at the node reached by `prefix` (a string over u/d).
    fn excess(&self, n: usize, prefix: &str) -> PyResult<f64> {
        self.inner.excess(n, path(prefix)?.signs()).py()
    }

    /// Smallest margins of the coefficient bounds; tables only.
    fn validate_bounds<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let t = self.table.as_ref().ok_or_else(|| PyValueError::new_err("bound check needs a table"))?;
        let r = kernels::validate_coeff_bounds(t).py()?;
        to_py(py, &serde_json::json!({ "pass": r.pass, "quad_tol": r.quad_tol, "min_margins": r.summary() }))
    }
}

#[pyclass(name = "MarketModel", frozen)]
struct PyMarket(market::MarketModel);

#[pymethods]
impl PyMarket {
    #[new]
    #[pyo3(signature = (coeffs, n_steps, s0=1.0))]
    fn new(coeffs: &PyCoefficients, n_steps: usize, s0: f64) -> PyResult<Self> {
        Ok(PyMarket(market::MarketModel::new(coeffs.inner.clone(), n_steps, s0).py()?))
    }

    #[getter]
    fn n_steps(&self) -> usize {
        self.0.n_steps()
    }

    #[getter]
    fn s0(&self) -> f64 {
        self.0.s0()
    }

    #[getter]
    fn scale(&self) -> f64 {
        self.0.scale()
    }

    /// `(u, d)` at the node reached by `prefix`.
    fn node_moves(&self, prefix: &str) -> PyResult<(f64, f64)> {
        let m = self.0.node_moves(path(prefix)?.signs()).py()?;
        Ok((m.up, m.down))
    }

    fn price_along_path(&self, p: &str) -> PyResult<Vec<f64>> {
        self.0.price_along_path(path(p)?.signs()).py()
    }

    fn sample_paths(&self, count: usize, seed: u64) -> Vec<String> {
        self.0.sample_paths(count, seed).iter().map(|p| p.to_string()).collect()
    }
}

#[pyclass(name = "Strategy", frozen)]
struct PyStrategy(strat::Strategy);

#[pymethods]
impl PyStrategy {
    #[getter]
    fn horizon(&self) -> usize {
        self.0.horizon()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    /// `(prefix, bond, stock)` for every recorded trade.
    fn entries(&self) -> Vec<(String, f64, f64)> {
        self.0.entries().into_iter().map(|(p, h)| (p.to_string(), h.bond, h.stock)).collect()
    }

    /// `(bond, stock)` held after step `n` along `p`.
    fn holdings_at(&self, p: &str, n: usize) -> PyResult<(f64, f64)> {
        let h = self.0.holdings_at(path(p)?.signs(), n);
        Ok((h.bond, h.stock))
    }

    fn scaled(&self, q: f64) -> PyResult<Self> {
        Ok(PyStrategy(strat::scaled_strategy(&self.0, q).py()?))
    }
}

#[pyfunction]
fn sottinen_strategy(market: &PyMarket, lam: f64, n0: usize) -> PyResult<PyStrategy> {
    Ok(PyStrategy(strat::sottinen_strategy(&market.0, lam, n0).py()?))
}

#[pyfunction]
#[pyo3(signature = (market, lam, gamma, horizon="maximal"))]
fn gamma_strategy(market: &PyMarket, lam: f64, gamma: f64, horizon: &str) -> PyResult<PyStrategy> {
    let h: Horizon = horizon.parse().py()?;
    Ok(PyStrategy(strat::gamma_strategy(&market.0, lam, gamma, h).py()?))
}

/// One-step strategy trading `quantity[x]` at every node `x` of level `n`.
#[pyfunction]
fn one_step_strategy(
    market: &PyMarket,
    lam: f64,
    n: usize,
    short: Vec<bool>,
    quantity: Vec<f64>,
) -> PyResult<PyStrategy> {
    let spec = strat::OneStepSpec::new(n, short, quantity).py()?;
    Ok(PyStrategy(strat::one_step_strategy(&market.0, lam, &spec).py()?))
}

#[pyfunction]
fn evaluate_value_process(market: &PyMarket, strategy: &PyStrategy, p: &str, lam: f64) -> PyResult<Vec<f64>> {
    Ok(strat::evaluate_value_process(&market.0, &strategy.0, path(p)?.signs(), lam).py()?.values)
}

#[pyfunction]
fn verify_arbitrage_exhaustive<'py>(
    py: Python<'py>,
    market: &PyMarket,
    strategy: &PyStrategy,
    lam: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let cert = py.detach(|| arb::verify_arbitrage_exhaustive(&market.0, &strategy.0, lam)).py()?;
    to_py(py, &cert)
}

#[pyfunction]
fn lambda_phi(market: &PyMarket, n0: usize) -> PyResult<f64> {
    arb::lambda_phi(&market.0, n0).py()
}

#[pyfunction]
#[pyo3(signature = (market, gamma, horizon="maximal"))]
fn lambda_psi<'py>(py: Python<'py>, market: &PyMarket, gamma: f64, horizon: &str) -> PyResult<Bound<'py, PyAny>> {
    let h: Horizon = horizon.parse().py()?;
    to_py(py, &arb::lambda_psi(&market.0, gamma, h).py()?)
}

#[pyfunction]
fn lower_bound_lowbd(market: &PyMarket) -> PyResult<f64> {
    arb::lower_bound_lowbd(&market.0).py()
}

#[pyfunction]
fn exact_one_step_critical(market: &PyMarket) -> PyResult<f64> {
    arb::exact_one_step_critical(&market.0).py()
}

#[pyfunction]
fn find_n_h<'py>(py: Python<'py>, coeffs: &PyCoefficients, horizon: usize) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &arb::find_n_h(coeffs.inner.as_ref(), horizon).py()?)
}

#[pyfunction]
fn gamma_constants<'py>(py: Python<'py>, params: &PyHurstParams, gamma: f64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &arb::gamma_constants(&params.0, gamma).py()?)
}

#[pyfunction]
fn a_gamma(coeffs: &PyCoefficients, gamma: f64, n_steps: usize, k: usize) -> PyResult<f64> {
    arb::a_gamma(coeffs.inner.as_ref(), gamma, n_steps, k).py()
}

#[pyfunction]
fn census_exhaustive<'py>(py: Python<'py>, coeffs: &PyCoefficients, n: usize) -> PyResult<Bound<'py, PyAny>> {
    let c = coeffs.inner.clone();
    to_py(py, &py.detach(|| arb::census_exhaustive(c.as_ref(), n)).py()?)
}

#[pyfunction]
#[pyo3(signature = (coeffs, n, samples, seed=0))]
fn census_monte_carlo<'py>(
    py: Python<'py>,
    coeffs: &PyCoefficients,
    n: usize,
    samples: u64,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let c = coeffs.inner.clone();
    to_py(py, &py.detach(|| arb::census_monte_carlo(c.as_ref(), n, samples, seed)).py()?)
}

#[pyfunction]
#[pyo3(signature = (coeffs, p, n_grid, n_h, s0=1.0))]
fn aa1_verify<'py>(
    py: Python<'py>,
    coeffs: &PyCoefficients,
    p: f64,
    n_grid: Vec<usize>,
    n_h: usize,
    s0: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let schedule = asy::aa1_schedule(coeffs.inner.params().hurst(), p, n_grid).py()?;
    let c = coeffs.inner.clone();
    to_py(py, &py.detach(|| asy::aa1_verify(c, &schedule, n_h, s0)).py()?)
}

#[pyfunction]
#[pyo3(signature = (params, n, quad_tol=1e-10))]
fn variance_scaling<'py>(
    py: Python<'py>,
    params: &PyHurstParams,
    n: usize,
    quad_tol: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let p = params.0;
    to_py(py, &py.detach(|| asy::variance_scaling(&p, n, quad_tol)).py()?)
}

#[pyfunction]
fn phi_integral(m: u64, k: u64, params: &PyHurstParams) -> PyResult<f64> {
    kernels::phi_integral(m, k, &params.0).py()
}

#[pymodule]
fn fracmarket_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyHurstParams>()?;
    m.add_class::<PyCoefficients>()?;
    m.add_class::<PyMarket>()?;
    m.add_class::<PyStrategy>()?;
    m.add_function(wrap_pyfunction!(sottinen_strategy, m)?)?;
    m.add_function(wrap_pyfunction!(gamma_strategy, m)?)?;
    m.add_function(wrap_pyfunction!(one_step_strategy, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_value_process, m)?)?;
    m.add_function(wrap_pyfunction!(verify_arbitrage_exhaustive, m)?)?;
    m.add_function(wrap_pyfunction!(lambda_phi, m)?)?;
    m.add_function(wrap_pyfunction!(lambda_psi, m)?)?;
    m.add_function(wrap_pyfunction!(lower_bound_lowbd, m)?)?;
    m.add_function(wrap_pyfunction!(exact_one_step_critical, m)?)?;
    m.add_function(wrap_pyfunction!(find_n_h, m)?)?;
    m.add_function(wrap_pyfunction!(gamma_constants, m)?)?;
    m.add_function(wrap_pyfunction!(a_gamma, m)?)?;
    m.add_function(wrap_pyfunction!(census_exhaustive, m)?)?;
    m.add_function(wrap_pyfunction!(census_monte_carlo, m)?)?;
    m.add_function(wrap_pyfunction!(aa1_verify, m)?)?;
    m.add_function(wrap_pyfunction!(variance_scaling, m)?)?;
    m.add_function(wrap_pyfunction!(phi_integral, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
