//! Increasing-profit strategies and the structure-condition diagnostic.
//!
//! The boundary strategy holds one share exactly when the price sits on the
//! reflecting boundary and banks the reflection increment. From a zero
//! endowment its value solves `dV = r V dt + dL`, which is non-decreasing and
//! strictly positive after the first visit to the boundary.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{validate_params, ModelParams};
use crate::sim::{rgbm_path_unchecked, PathSample, TimeGrid};
use crate::stats::CompensatedSum;

/// Value and stock holding of a zero-endowment portfolio on a time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioTrajectory {
    pub times: Vec<f64>,
    pub value: Vec<f64>,
    pub position: Vec<f64>,
    pub seed: u64,
}

impl PortfolioTrajectory {
    pub fn terminal_value(&self) -> f64 {
        *self.value.last().expect("trajectory is non-empty")
    }

    /// Step-wise `value[i+1] >= value[i]`, checked exactly.
    pub fn is_non_decreasing(&self) -> bool {
        self.value.windows(2).all(|w| w[1] >= w[0])
    }
}

/// Runs the boundary-harvesting strategy on the reflected path for `seed`.
pub fn run_reflection_arbitrage(
    params: &ModelParams,
    grid: &TimeGrid,
    seed: u64,
) -> Result<PortfolioTrajectory> {
    let params = validate_params(*params)?;
    let grid = grid.validate()?;
    let path = rgbm_path_unchecked(&params, &grid, seed, 0, 1.0);
    Ok(reflection_arbitrage_on_path(&path, &params))
}

/// Portfolio of the boundary strategy along an already simulated path.
///
/// The bank balance grows by the exact factor `exp(r dt)` per step, so the
/// value is non-decreasing in floating point and equals `l` bit for bit when
/// `r = 0`.
pub fn reflection_arbitrage_on_path(path: &PathSample, params: &ModelParams) -> PortfolioTrajectory {
    let growth = (params.r * path.dt()).exp();
    let mut value = Vec::with_capacity(path.s.len());
    value.push(0.0);
    let mut v = 0.0;
    for inc in &path.dl[1..] {
        v = v * growth + inc;
        value.push(v);
    }
    let position = path.s.iter().map(|&s| if s == params.b { 1.0 } else { 0.0 }).collect();
    PortfolioTrajectory { times: path.times.clone(), value, position, seed: path.seed }
}

/// Deterministic, piecewise-constant semimartingale characteristics.
///
/// Segment `k` covers `[breakpoints[k], breakpoints[k+1])`; on it the rate
/// density is `rho[k]`, the drift density `drift[k]`, the volatility `vol[k]`
/// and the clock runs at `clock_rate[k] = dG/dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicsSpec {
    pub breakpoints: Vec<f64>,
    pub rho: Vec<f64>,
    pub drift: Vec<f64>,
    pub vol: Vec<f64>,
    pub clock_rate: Vec<f64>,
}

impl CharacteristicsSpec {
    /// Single segment on `[0, horizon]`.
    pub fn constant(horizon: f64, rho: f64, drift: f64, vol: f64, clock_rate: f64) -> Self {
        CharacteristicsSpec {
            breakpoints: vec![0.0, horizon],
            rho: vec![rho],
            drift: vec![drift],
            vol: vec![vol],
            clock_rate: vec![clock_rate],
        }
    }

    pub fn horizon(&self) -> f64 {
        *self.breakpoints.last().unwrap_or(&0.0)
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.breakpoints.len();
        if m < 2 {
            return Err(Error::InvalidArgument("need at least one segment".into()));
        }
        for (name, v) in [
            ("rho", &self.rho),
            ("drift", &self.drift),
            ("vol", &self.vol),
            ("clock_rate", &self.clock_rate),
        ] {
            if v.len() != m - 1 {
                return Err(Error::InvalidArgument(format!(
                    "{name} has {} values for {} segments",
                    v.len(),
                    m - 1
                )));
            }
            if let Some(&bad) = v.iter().find(|x| !x.is_finite()) {
                return Err(Error::NonFinite { name: "characteristics", value: bad });
            }
        }
        if self.breakpoints.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidArgument("breakpoints must be finite".into()));
        }
        if self.breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("breakpoints must be strictly increasing".into()));
        }
        if self.clock_rate.iter().any(|&g| g < 0.0) {
            return Err(Error::InvalidArgument("clock rate dG/dt must be >= 0".into()));
        }
        Ok(())
    }

    /// Rate at which the two-rate strategy compounds on segment `k`:
    /// `1{a = 0, b != rho} |b - rho| dG/dt`.
    fn excess_rate(&self, k: usize) -> f64 {
        if self.vol[k] == 0.0 && self.drift[k] != self.rho[k] {
            (self.drift[k] - self.rho[k]).abs() * self.clock_rate[k]
        } else {
            0.0
        }
    }

    /// Direction of the stock position on segment `k` (+1 long, -1 short).
    fn direction(&self, k: usize) -> f64 {
        if self.vol[k] != 0.0 || self.drift[k] == self.rho[k] {
            0.0
        } else if self.drift[k] > self.rho[k] {
            1.0
        } else {
            -1.0
        }
    }

    fn segment_of(&self, t: f64) -> usize {
        let k = self.breakpoints.partition_point(|&bp| bp <= t);
        k.saturating_sub(1).min(self.rho.len() - 1)
    }
}

/// Zero-endowment two-rate strategy: long the unit-endowment portfolio that
/// is invested in the stock whenever it is locally riskless with a drift
/// different from the bank's, short the bank account.
///
/// `value(t) = exp(r t) (exp(I(t)) - 1)` with
/// `I(t) = int_0^t 1{a = 0, b != rho} |b - rho| dG`. The exponent is
/// accumulated step by step on `grid`, splitting steps at breakpoints.
/// `position` is the money held in the stock by the long leg, signed.
pub fn run_two_rate_increasing_profit(
    spec: &CharacteristicsSpec,
    r: f64,
    grid: &TimeGrid,
) -> Result<PortfolioTrajectory> {
    spec.validate()?;
    let grid = grid.validate()?;
    if !r.is_finite() {
        return Err(Error::NonFinite { name: "r", value: r });
    }
    let times = grid.times();
    let mut value = Vec::with_capacity(times.len());
    let mut position = Vec::with_capacity(times.len());
    let mut exponent = integrated_excess(spec, 0.0, times[0]);
    for (i, &t) in times.iter().enumerate() {
        if i > 0 {
            exponent += integrated_excess(spec, times[i - 1], t);
        }
        value.push((r * t).exp() * exponent.exp_m1());
        let unit = (r * t + exponent).exp();
        position.push(spec.direction(spec.segment_of(t)) * unit);
    }
    Ok(PortfolioTrajectory { times, value, position, seed: 0 })
}

/// `int_from^to excess_rate(s) ds`, exact for piecewise-constant data.
fn integrated_excess(spec: &CharacteristicsSpec, from: f64, to: f64) -> f64 {
    if to <= from {
        return 0.0;
    }
    let mut acc = 0.0;
    for k in 0..spec.rho.len() {
        let lo = spec.breakpoints[k].max(from);
        let hi = spec.breakpoints[k + 1].min(to);
        if hi > lo {
            acc += spec.excess_rate(k) * (hi - lo);
        }
    }
    acc
}

/// Path-averaged decomposition of the discounted drift measure `A^` and the
/// discounted quadratic-variation measure `<M^>` into reflection-step and
/// interior-step masses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub a_hat_interior_mass: f64,
    pub a_hat_reflection_mass: f64,
    pub qv_interior_mass: f64,
    pub qv_reflection_mass: f64,
    /// Lebesgue mass of reflection steps: mean count of reflection steps times `dt`.
    pub reflection_time_mass: f64,
    pub dt_used: f64,
    pub n_paths: usize,
}

impl DiagnosticsReport {
    pub fn qv_to_drift_ratio(&self) -> f64 {
        self.qv_reflection_mass / self.a_hat_reflection_mass
    }
}

#[derive(Clone, Copy, Default)]
struct PathMasses {
    a_int: f64,
    a_ref: f64,
    qv_int: f64,
    qv_ref: f64,
    ref_steps: f64,
}

/// Accumulates, over `n_paths` reflected paths, the masses that `A^` and
/// `<M^>` put on reflection steps and on interior steps.
///
/// On a step `i -> i+1` with left-point discounted price `s^ = s_i e^{-r t_i}`:
///
/// * reflection step: `A^ += e^{-r t_{i+1}} dL`, `<M^> += sigma^2 s^^2 dt`;
/// * interior step: `A^ += (mu - r) s^ dt`, `<M^> += sigma^2 s^^2 dt`.
///
/// Path `k` uses stream `k` under `seed`; the average is reduced in path
/// order, so the report does not depend on the worker count.
pub fn structure_condition_diagnostic(
    params: &ModelParams,
    grid: &TimeGrid,
    n_paths: usize,
    seed: u64,
) -> Result<DiagnosticsReport> {
    let params = validate_params(*params)?;
    let grid = grid.validate()?;
    if n_paths == 0 {
        return Err(Error::InvalidArgument("n_paths must be positive".into()));
    }
    let dt = grid.dt();
    let per_path: Vec<PathMasses> = (0..n_paths as u64)
        .into_par_iter()
        .map(|k| path_masses(&params, &grid, seed, k))
        .collect();

    let mut sums = [CompensatedSum::new(); 5];
    for m in &per_path {
        for (acc, x) in sums.iter_mut().zip([m.a_int, m.a_ref, m.qv_int, m.qv_ref, m.ref_steps]) {
            acc.add(x);
        }
    }
    let n = n_paths as f64;
    Ok(DiagnosticsReport {
        a_hat_interior_mass: sums[0].value() / n,
        a_hat_reflection_mass: sums[1].value() / n,
        qv_interior_mass: sums[2].value() / n,
        qv_reflection_mass: sums[3].value() / n,
        reflection_time_mass: sums[4].value() / n * dt,
        dt_used: dt,
        n_paths,
    })
}

fn path_masses(params: &ModelParams, grid: &TimeGrid, seed: u64, path_index: u64) -> PathMasses {
    let path = rgbm_path_unchecked(params, grid, seed, path_index, 1.0);
    let dt = grid.dt();
    let var = params.sigma * params.sigma;
    let excess = params.mu - params.r;
    let mut acc = [CompensatedSum::new(); 4];
    let mut ref_steps = 0usize;
    for i in 0..path.n_steps() {
        let disc = (-params.r * path.times[i]).exp();
        let s_hat = path.s[i] * disc;
        let qv = var * s_hat * s_hat * dt;
        if path.reflected[i + 1] {
            acc[1].add((-params.r * path.times[i + 1]).exp() * path.dl[i + 1]);
            acc[3].add(qv);
            ref_steps += 1;
        } else {
            acc[0].add(excess * s_hat * dt);
            acc[2].add(qv);
        }
    }
    PathMasses {
        a_int: acc[0].value(),
        a_ref: acc[1].value(),
        qv_int: acc[2].value(),
        qv_ref: acc[3].value(),
        ref_steps: ref_steps as f64,
    }
}
