//! Python bindings for `rgbm_core`.
//!
//! Model and contract objects are thin frozen wrappers; every operation
//! releases the GIL while the Rust side runs. Errors surface as
//! `rgbm.RgbmError` (a `ValueError`) whose message starts with the stable
//! error code, e.g. `theta_zero_unsupported: ...`.

use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use rgbm_core::arbitrage::{self, DiagnosticsReport, PortfolioTrajectory};
use rgbm_core::bounds::{self, AxisParam, BoundVerdict, CellOutcome, SweepAxis, SweepBase, SweepTarget};
use rgbm_core::pricing::{self, McScheme, PriceQuote};
use rgbm_core::{sim, ModelParams, OptionKind, OptionSpec, PathSample, TimeGrid};

create_exception!(rgbm, RgbmError, PyValueError);

fn to_py(e: rgbm_core::Error) -> PyErr {
    RgbmError::new_err(e.to_string())
}

fn parse<T: std::str::FromStr<Err = rgbm_core::Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(to_py)
}

fn grid(t0: f64, horizon: f64, steps: usize) -> PyResult<TimeGrid> {
    TimeGrid::new(t0, horizon, steps).map_err(to_py)
}

/// Market parameters `(mu, sigma, b, r, q, s0)`, validated on construction.
#[pyclass(name = "ModelParams", module = "rgbm", frozen, from_py_object)]
#[derive(Clone, Copy)]
pub struct PyModelParams(pub ModelParams);

#[pymethods]
impl PyModelParams {
    #[new]
    #[pyo3(signature = (mu, sigma, b, r, s0, q = 0.0))]
    fn new(mu: f64, sigma: f64, b: f64, r: f64, s0: f64, q: f64) -> PyResult<Self> {
        ModelParams::new(mu, sigma, b, r, q, s0).map(Self).map_err(to_py)
    }

    /// Parameter set behind figure 1, 2, 3 or 4.
    #[staticmethod]
    fn preset(index: u8) -> PyResult<Self> {
        Ok(Self(match index {
            1 => ModelParams::figure1(),
            2 => ModelParams::figure2(),
            3 => ModelParams::figure3(),
            4 => ModelParams::figure4(),
            _ => return Err(RgbmError::new_err(format!("invalid_argument: no preset {index}"))),
        }))
    }

    #[getter]
    fn mu(&self) -> f64 {
        self.0.mu
    }
    #[getter]
    fn sigma(&self) -> f64 {
        self.0.sigma
    }
    #[getter]
    fn b(&self) -> f64 {
        self.0.b
    }
    #[getter]
    fn r(&self) -> f64 {
        self.0.r
    }
    #[getter]
    fn q(&self) -> f64 {
        self.0.q
    }
    #[getter]
    fn s0(&self) -> f64 {
        self.0.s0
    }

    /// `2 (r - q) / sigma^2`.
    fn theta(&self) -> f64 {
        self.0.theta()
    }

    fn __repr__(&self) -> String {
        let p = self.0;
        format!("ModelParams(mu={}, sigma={}, b={}, r={}, s0={}, q={})", p.mu, p.sigma, p.b, p.r, p.s0, p.q)
    }
}

/// European contract: kind (`"call"`, `"put"` or `"nneg"`), strike, maturity
/// and valuation time.
#[pyclass(name = "OptionSpec", module = "rgbm", frozen, from_py_object)]
#[derive(Clone, Copy)]
pub struct PyOptionSpec(pub OptionSpec);

#[pymethods]
impl PyOptionSpec {
    #[new]
    #[pyo3(signature = (kind, strike, maturity, valuation_time = 0.0))]
    fn new(kind: &str, strike: f64, maturity: f64, valuation_time: f64) -> PyResult<Self> {
        let spec = OptionSpec::new(parse::<OptionKind>(kind)?, strike, maturity, valuation_time);
        spec.validate().map_err(to_py)?;
        Ok(Self(spec))
    }

    #[getter]
    fn kind(&self) -> String {
        self.0.kind.to_string()
    }
    #[getter]
    fn strike(&self) -> f64 {
        self.0.strike
    }
    #[getter]
    fn maturity(&self) -> f64 {
        self.0.maturity
    }
    #[getter]
    fn valuation_time(&self) -> f64 {
        self.0.valuation_time
    }

    fn tau(&self) -> f64 {
        self.0.tau()
    }

    fn payoff(&self, s: f64) -> f64 {
        self.0.payoff(s)
    }

    fn __repr__(&self) -> String {
        let o = self.0;
        format!("OptionSpec('{}', strike={}, maturity={}, valuation_time={})", o.kind, o.strike, o.maturity, o.valuation_time)
    }
}

/// One simulated path on a uniform grid.
#[pyclass(name = "Path", module = "rgbm", frozen)]
pub struct PyPath(PathSample);

#[pymethods]
impl PyPath {
    #[getter]
    fn times(&self) -> Vec<f64> {
        self.0.times.clone()
    }
    #[getter]
    fn s(&self) -> Vec<f64> {
        self.0.s.clone()
    }
    /// Cumulative reflection term.
    #[getter]
    fn l(&self) -> Vec<f64> {
        self.0.l.clone()
    }
    #[getter]
    fn reflected(&self) -> Vec<bool> {
        self.0.reflected.clone()
    }
    #[getter]
    fn seed(&self) -> u64 {
        self.0.seed
    }
    fn terminal_s(&self) -> f64 {
        self.0.terminal_s()
    }
    fn terminal_l(&self) -> f64 {
        self.0.terminal_l()
    }
    fn reflection_count(&self) -> usize {
        self.0.reflection_count()
    }
    fn first_passage_time(&self, level: f64) -> Option<f64> {
        sim::first_passage_time(&self.0, level)
    }
    /// Occupation-time estimate of the boundary local time with band `epsilon`.
    fn local_time_estimate(&self, params: PyModelParams, epsilon: f64) -> PyResult<f64> {
        sim::local_time_occupation_estimate(&self.0, &params.0, epsilon).map(|e| e.value).map_err(to_py)
    }
    fn __len__(&self) -> usize {
        self.0.s.len()
    }
}

/// Reflected path over `[0, horizon]` in `steps` projected Euler steps;
/// `reflect=False` gives the exact GBM path on the same draws.
#[pyfunction]
#[pyo3(signature = (params, horizon, steps, seed, reflect = true))]
fn simulate_path(
    py: Python<'_>,
    params: PyModelParams,
    horizon: f64,
    steps: usize,
    seed: u64,
    reflect: bool,
) -> PyResult<PyPath> {
    let g = grid(0.0, horizon, steps)?;
    py.detach(|| {
        if reflect {
            sim::simulate_rgbm_path(&params.0, &g, seed)
        } else {
            sim::simulate_gbm_path(&params.0, &g, seed)
        }
    })
    .map(PyPath)
    .map_err(to_py)
}

/// A price with its method and, for the RGBM formulas, the `z` arguments.
#[pyclass(name = "Quote", module = "rgbm", frozen, get_all)]
pub struct PyQuote {
    value: f64,
    method: String,
    theta: Option<f64>,
    z1: Option<f64>,
    z2: Option<f64>,
    z3: Option<f64>,
    z4: Option<f64>,
}

impl From<PriceQuote> for PyQuote {
    fn from(q: PriceQuote) -> Self {
        let z = q.intermediates;
        PyQuote {
            value: q.value,
            method: q.method.to_string(),
            theta: z.map(|z| z.theta),
            z1: z.map(|z| z.z1),
            z2: z.and_then(|z| z.z2),
            z3: z.map(|z| z.z3),
            z4: z.map(|z| z.z4),
        }
    }
}

#[pymethods]
impl PyQuote {
    fn __float__(&self) -> f64 {
        self.value
    }
    fn __repr__(&self) -> String {
        format!("Quote({}, {})", self.method, self.value)
    }
}

/// RGBM closed form for the contract's kind.
#[pyfunction]
fn rgbm_price(spec: PyOptionSpec, spot: f64, params: PyModelParams) -> PyResult<PyQuote> {
    pricing::rgbm_price(&spec.0, spot, &params.0).map(Into::into).map_err(to_py)
}

/// Black-Scholes for calls and puts, Black-76 for NNEG.
#[pyfunction]
fn baseline_price(spec: PyOptionSpec, spot: f64, params: PyModelParams) -> PyResult<PyQuote> {
    pricing::baseline_price(&spec.0, spot, &params.0).map(Into::into).map_err(to_py)
}

#[pyfunction]
fn bs_call(spec: PyOptionSpec, spot: f64, r: f64, sigma: f64) -> PyResult<f64> {
    pricing::bs_call(&spec.0, spot, r, sigma).map(|q| q.value).map_err(to_py)
}

#[pyfunction]
fn bs_put(spec: PyOptionSpec, spot: f64, r: f64, sigma: f64) -> PyResult<f64> {
    pricing::bs_put(&spec.0, spot, r, sigma).map(|q| q.value).map_err(to_py)
}

#[pyfunction]
fn black76_put(spec: PyOptionSpec, spot: f64, r: f64, q: f64, sigma: f64) -> PyResult<f64> {
    pricing::black76_put(&spec.0, spot, r, q, sigma).map(|q| q.value).map_err(to_py)
}

#[pyclass(name = "McEstimate", module = "rgbm", frozen, get_all)]
pub struct PyMcEstimate {
    mean: f64,
    std_error: f64,
    n_paths: usize,
    seed: u64,
}

#[pymethods]
impl PyMcEstimate {
    fn z_score(&self, value: f64) -> f64 {
        (self.mean - value) / self.std_error
    }
    fn __repr__(&self) -> String {
        format!("McEstimate(mean={}, std_error={}, n_paths={})", self.mean, self.std_error, self.n_paths)
    }
}

/// Monte Carlo price. `scheme` is `"euler"` (needs `steps`) or `"exact"`.
#[pyfunction]
#[pyo3(signature = (spec, spot, params, n_paths, seed, steps = 1000, scheme = "euler"))]
#[allow(clippy::too_many_arguments)]
fn mc_price(
    py: Python<'_>,
    spec: PyOptionSpec,
    spot: f64,
    params: PyModelParams,
    n_paths: usize,
    seed: u64,
    steps: usize,
    scheme: &str,
) -> PyResult<PyMcEstimate> {
    let scheme = match scheme {
        "euler" => McScheme::Euler { grid: grid(spec.0.valuation_time, spec.0.maturity, steps)? },
        "exact" => McScheme::ExactTerminal,
        other => return Err(RgbmError::new_err(format!("invalid_argument: unknown scheme '{other}'"))),
    };
    let est = py
        .detach(|| pricing::mc_price_with(&spec.0, spot, &params.0, n_paths, scheme, seed))
        .map_err(to_py)?;
    Ok(PyMcEstimate { mean: est.mean, std_error: est.std_error, n_paths: est.n_paths, seed: est.seed })
}

fn verdict_dict<'py>(py: Python<'py>, v: &BoundVerdict) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    let kind = match v.kind {
        bounds::BoundKind::CallUpper => "call_upper",
        bounds::BoundKind::PutLower => "put_lower",
        bounds::BoundKind::NnegLower => "nneg_lower",
    };
    d.set_item("kind", kind)?;
    d.set_item("bound_value", v.bound_value)?;
    d.set_item("price", v.price)?;
    d.set_item("margin", v.margin)?;
    d.set_item("violated", v.violated)?;
    Ok(d)
}

/// Model-free bound for the contract at `price`: a dict with `kind`,
/// `bound_value`, `price`, `margin` (positive when violated) and `violated`.
#[pyfunction]
fn check_bound<'py>(
    py: Python<'py>,
    spec: PyOptionSpec,
    price: f64,
    spot: f64,
    params: PyModelParams,
) -> PyResult<Bound<'py, PyDict>> {
    verdict_dict(py, &bounds::check_bound(&spec.0, price, spot, &params.0))
}

/// Long-maturity limit of the RGBM NNEG price.
#[pyfunction]
fn nneg_asymptote(strike: f64, b: f64, theta: f64) -> PyResult<f64> {
    bounds::nneg_asymptote(strike, b, theta).map_err(to_py)
}

/// Maturity in `[lo, hi]` where the RGBM NNEG price drops below its bound.
#[pyfunction]
fn nneg_crossing_maturity(params: PyModelParams, spot: f64, strike: f64, lo: f64, hi: f64) -> PyResult<f64> {
    bounds::nneg_crossing_maturity(&params.0, spot, strike, lo, hi).map_err(to_py)
}

/// Width of the violated spot interval starting at the boundary, or `None`.
#[pyfunction]
#[pyo3(signature = (spec, params, max_offset = 2.0, tol = 1e-6))]
fn boundary_violation_extent(spec: PyOptionSpec, params: PyModelParams, max_offset: f64, tol: f64) -> PyResult<Option<f64>> {
    bounds::boundary_violation_extent(&spec.0, &params.0, max_offset, tol).map_err(to_py)
}

/// Evaluates a bound over the cartesian product of `axes`, a list of
/// `(name, values)` pairs. Returns a dict with the counts, the first violated
/// coordinates, the NNEG crossing maturity and per-cell rows
/// `(coords, price, bound, violated)` (price and bound are `None` where the
/// formula is undefined).
#[pyfunction]
#[pyo3(signature = (target, axes, params, spot, strike, tau, lock_theta_one = false))]
#[allow(clippy::too_many_arguments)]
fn violation_sweep<'py>(
    py: Python<'py>,
    target: &str,
    axes: Vec<(String, Vec<f64>)>,
    params: PyModelParams,
    spot: f64,
    strike: f64,
    tau: f64,
    lock_theta_one: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let target: SweepTarget = parse(target)?;
    let axes = axes
        .into_iter()
        .map(|(name, values)| Ok(SweepAxis::new(parse::<AxisParam>(&name)?, values)))
        .collect::<PyResult<Vec<_>>>()?;
    let base = SweepBase { params: params.0, spot, strike, tau, lock_theta_one };
    let res = py.detach(|| bounds::violation_sweep(target, &axes, &base)).map_err(to_py)?;

    let d = PyDict::new(py);
    d.set_item("shape", res.shape())?;
    d.set_item("violated_count", res.violated_count)?;
    d.set_item("undefined_count", res.undefined_count)?;
    d.set_item("first_violation", res.first_violation.clone())?;
    d.set_item("crossing_tau", res.crossing_tau)?;
    let cells: Vec<(Vec<f64>, Option<f64>, Option<f64>, bool)> = res
        .cells
        .iter()
        .map(|c| match &c.outcome {
            CellOutcome::Priced { price, bound, violated, .. } => (c.coords.clone(), Some(*price), Some(*bound), *violated),
            CellOutcome::Undefined { .. } => (c.coords.clone(), None, None, false),
        })
        .collect();
    d.set_item("cells", cells)?;
    Ok(d)
}

/// Value and stock position of a zero-endowment strategy.
#[pyclass(name = "Trajectory", module = "rgbm", frozen)]
pub struct PyTrajectory(PortfolioTrajectory);

#[pymethods]
impl PyTrajectory {
    #[getter]
    fn times(&self) -> Vec<f64> {
        self.0.times.clone()
    }
    #[getter]
    fn value(&self) -> Vec<f64> {
        self.0.value.clone()
    }
    #[getter]
    fn position(&self) -> Vec<f64> {
        self.0.position.clone()
    }
    fn terminal_value(&self) -> f64 {
        self.0.terminal_value()
    }
    fn is_non_decreasing(&self) -> bool {
        self.0.is_non_decreasing()
    }
}

/// Boundary-harvesting strategy on the reflected path for `seed`.
#[pyfunction]
fn run_reflection_arbitrage(py: Python<'_>, params: PyModelParams, horizon: f64, steps: usize, seed: u64) -> PyResult<PyTrajectory> {
    let g = grid(0.0, horizon, steps)?;
    py.detach(|| arbitrage::run_reflection_arbitrage(&params.0, &g, seed)).map(PyTrajectory).map_err(to_py)
}

/// Two-rate strategy on a single segment of constant characteristics: bank
/// rate `r` against rate density `rho`, drift and volatility densities, and
/// clock speed `dG/dt`.
#[pyfunction]
#[pyo3(signature = (r, rho, drift, vol, horizon, steps, clock_rate = 1.0))]
#[allow(clippy::too_many_arguments)]
fn run_two_rate_increasing_profit(
    r: f64,
    rho: f64,
    drift: f64,
    vol: f64,
    horizon: f64,
    steps: usize,
    clock_rate: f64,
) -> PyResult<PyTrajectory> {
    let spec = arbitrage::CharacteristicsSpec::constant(horizon, rho, drift, vol, clock_rate);
    arbitrage::run_two_rate_increasing_profit(&spec, r, &grid(0.0, horizon, steps)?)
        .map(PyTrajectory)
        .map_err(to_py)
}

#[pyclass(name = "Diagnostics", module = "rgbm", frozen, get_all)]
pub struct PyDiagnostics {
    a_hat_interior_mass: f64,
    a_hat_reflection_mass: f64,
    qv_interior_mass: f64,
    qv_reflection_mass: f64,
    reflection_time_mass: f64,
    dt_used: f64,
    n_paths: usize,
}

impl From<DiagnosticsReport> for PyDiagnostics {
    fn from(r: DiagnosticsReport) -> Self {
        PyDiagnostics {
            a_hat_interior_mass: r.a_hat_interior_mass,
            a_hat_reflection_mass: r.a_hat_reflection_mass,
            qv_interior_mass: r.qv_interior_mass,
            qv_reflection_mass: r.qv_reflection_mass,
            reflection_time_mass: r.reflection_time_mass,
            dt_used: r.dt_used,
            n_paths: r.n_paths,
        }
    }
}

#[pymethods]
impl PyDiagnostics {
    fn qv_to_drift_ratio(&self) -> f64 {
        self.qv_reflection_mass / self.a_hat_reflection_mass
    }
}

/// Reflection-step versus interior-step masses of the discounted drift and
/// quadratic-variation measures, averaged over `n_paths` paths.
#[pyfunction]
fn structure_condition_diagnostic(
    py: Python<'_>,
    params: PyModelParams,
    horizon: f64,
    steps: usize,
    n_paths: usize,
    seed: u64,
) -> PyResult<PyDiagnostics> {
    let g = grid(0.0, horizon, steps)?;
    py.detach(|| arbitrage::structure_condition_diagnostic(&params.0, &g, n_paths, seed))
        .map(Into::into)
        .map_err(to_py)
}

#[pyfunction]
fn norm_cdf(x: f64) -> f64 {
    rgbm_core::norm_cdf(x)
}

#[pymodule]
pub fn rgbm(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("RgbmError", m.py().get_type::<RgbmError>())?;
    m.add_class::<PyModelParams>()?;
    m.add_class::<PyOptionSpec>()?;
    m.add_class::<PyPath>()?;
    m.add_class::<PyQuote>()?;
    m.add_class::<PyMcEstimate>()?;
    m.add_class::<PyTrajectory>()?;
    m.add_class::<PyDiagnostics>()?;
    m.add_function(wrap_pyfunction!(simulate_path, m)?)?;
    m.add_function(wrap_pyfunction!(rgbm_price, m)?)?;
    m.add_function(wrap_pyfunction!(baseline_price, m)?)?;
    m.add_function(wrap_pyfunction!(bs_call, m)?)?;
    m.add_function(wrap_pyfunction!(bs_put, m)?)?;
    m.add_function(wrap_pyfunction!(black76_put, m)?)?;
    m.add_function(wrap_pyfunction!(mc_price, m)?)?;
    m.add_function(wrap_pyfunction!(check_bound, m)?)?;
    m.add_function(wrap_pyfunction!(nneg_asymptote, m)?)?;
    m.add_function(wrap_pyfunction!(nneg_crossing_maturity, m)?)?;
    m.add_function(wrap_pyfunction!(boundary_violation_extent, m)?)?;
    m.add_function(wrap_pyfunction!(violation_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(run_reflection_arbitrage, m)?)?;
    m.add_function(wrap_pyfunction!(run_two_rate_increasing_profit, m)?)?;
    m.add_function(wrap_pyfunction!(structure_condition_diagnostic, m)?)?;
    m.add_function(wrap_pyfunction!(norm_cdf, m)?)?;
    Ok(())
}
