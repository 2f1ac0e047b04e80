//! Path generation for reflected and plain GBM.
//!
//! The reflected scheme is Euler-Maruyama in price space followed by a
//! Skorokhod projection onto `[b, inf)`:
//!
//! ```text
//! Y      = s_i (1 + mu dt + sigma dW)
//! dL_i   = max(0, b - Y)
//! s_i+1  = Y + dL_i          (= b exactly whenever dL_i > 0)
//! L_i+1  = L_i + dL_i
//! ```
//!
//! The reflection term is stored in the additive normalisation `dS = ... + dL`.
//! The multiplicative form `(S / b) dL` coincides with it because `S = b`
//! whenever `L` moves.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{validate_params, ModelParams};
use crate::rng::PathRng;

/// Uniform grid on `[t0, horizon]` with `n_steps` intervals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t0: f64,
    pub horizon: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, horizon: f64, n_steps: usize) -> Result<Self> {
        TimeGrid { t0, horizon, n_steps }.validate()
    }

    /// Grid on `[0, horizon]` with step `dt` (rounded to the nearest count).
    pub fn with_step(horizon: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidGrid(format!("dt must be positive, got {dt}")));
        }
        TimeGrid::new(0.0, horizon, (horizon / dt).round() as usize)
    }

    pub fn validate(self) -> Result<Self> {
        if !self.t0.is_finite() || !self.horizon.is_finite() {
            return Err(Error::InvalidGrid("grid end points must be finite".into()));
        }
        if self.n_steps == 0 {
            return Err(Error::InvalidGrid("n_steps must be positive".into()));
        }
        if self.horizon <= self.t0 {
            return Err(Error::InvalidGrid(format!(
                "horizon {} must exceed t0 {}",
                self.horizon, self.t0
            )));
        }
        Ok(self)
    }

    pub fn dt(&self) -> f64 {
        (self.horizon - self.t0) / self.n_steps as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        if i == self.n_steps {
            self.horizon
        } else {
            self.t0 + i as f64 * self.dt()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|i| self.time(i)).collect()
    }
}

/// One simulated trajectory.
///
/// `reflected[i]` marks that the step ending at grid point `i` was projected
/// back onto the boundary; `dl[i]` is the reflection increment of that step
/// (zero at index 0 and on unflagged steps).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub times: Vec<f64>,
    pub s: Vec<f64>,
    pub l: Vec<f64>,
    pub dl: Vec<f64>,
    pub reflected: Vec<bool>,
    pub seed: u64,
}

impl PathSample {
    pub fn n_steps(&self) -> usize {
        self.s.len() - 1
    }

    pub fn terminal_l(&self) -> f64 {
        *self.l.last().expect("path has at least one point")
    }

    pub fn terminal_s(&self) -> f64 {
        *self.s.last().expect("path has at least one point")
    }

    pub fn reflection_count(&self) -> usize {
        self.reflected.iter().filter(|&&f| f).count()
    }

    pub fn dt(&self) -> f64 {
        (self.times[self.times.len() - 1] - self.times[0]) / self.n_steps() as f64
    }
}

/// Occupation-time estimate of the local time at the boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalTimeEstimate {
    pub epsilon: f64,
    pub value: f64,
}

/// One projected Euler step. Returns the new price and the reflection
/// increment.
#[inline]
pub(crate) fn reflected_step(s: f64, b: f64, drift_dt: f64, vol_dw: f64) -> (f64, f64) {
    let y = s * (1.0 + drift_dt + vol_dw);
    if y < b {
        (b, b - y)
    } else {
        (y, 0.0)
    }
}

/// Reflected GBM path for `(params, grid, seed)`; draws come from stream 0.
pub fn simulate_rgbm_path(params: &ModelParams, grid: &TimeGrid, seed: u64) -> Result<PathSample> {
    simulate_rgbm_path_scaled(params, grid, seed, 1.0)
}

/// As [`simulate_rgbm_path`] but with every Brownian increment multiplied by
/// `noise_scale`. A scale of zero switches the noise off and gives the
/// deterministic Euler recursion; intended for tests.
pub fn simulate_rgbm_path_scaled(
    params: &ModelParams,
    grid: &TimeGrid,
    seed: u64,
    noise_scale: f64,
) -> Result<PathSample> {
    let params = validate_params(*params)?;
    let grid = grid.validate()?;
    Ok(rgbm_path_unchecked(&params, &grid, seed, 0, noise_scale))
}

pub(crate) fn rgbm_path_unchecked(
    params: &ModelParams,
    grid: &TimeGrid,
    seed: u64,
    path_index: u64,
    noise_scale: f64,
) -> PathSample {
    let n = grid.n_steps;
    let dt = grid.dt();
    let drift_dt = params.mu * dt;
    let vol = params.sigma * dt.sqrt() * noise_scale;
    let mut rng = PathRng::new(seed, path_index);

    let mut s = Vec::with_capacity(n + 1);
    let mut l = Vec::with_capacity(n + 1);
    let mut dl = Vec::with_capacity(n + 1);
    let mut reflected = Vec::with_capacity(n + 1);
    s.push(params.s0);
    l.push(0.0);
    dl.push(0.0);
    reflected.push(false);

    let (mut cur_s, mut cur_l) = (params.s0, 0.0);
    for _ in 0..n {
        let (next, inc) = reflected_step(cur_s, params.b, drift_dt, vol * rng.normal());
        cur_s = next;
        cur_l += inc;
        s.push(cur_s);
        l.push(cur_l);
        dl.push(inc);
        reflected.push(inc > 0.0);
    }

    PathSample { times: grid.times(), s, l, dl, reflected, seed }
}

/// Terminal `(S_T, L_T)` of the projected Euler scheme without storing the
/// path. Uses the same draws as the full path generator.
pub(crate) fn rgbm_terminal_euler(
    s0: f64,
    b: f64,
    drift: f64,
    sigma: f64,
    grid: &TimeGrid,
    rng: &mut PathRng,
) -> (f64, f64) {
    let dt = grid.dt();
    let drift_dt = drift * dt;
    let vol = sigma * dt.sqrt();
    let (mut s, mut l) = (s0, 0.0);
    for _ in 0..grid.n_steps {
        let (next, inc) = reflected_step(s, b, drift_dt, vol * rng.normal());
        s = next;
        l += inc;
    }
    (s, l)
}

/// Exact draw of the reflected GBM at time `tau`.
///
/// `ln S` is a Brownian motion with drift reflected at `ln b`, so
/// `ln S_tau = X_tau + max(0, ln b - min X)` with `X` the free log-price. The
/// pair `(X_tau, min X)` is sampled exactly: `X_tau` is normal and the minimum
/// comes from the Brownian-bridge law given both end points.
pub(crate) fn rgbm_terminal_exact(
    s0: f64,
    b: f64,
    drift: f64,
    sigma: f64,
    tau: f64,
    rng: &mut PathRng,
) -> f64 {
    let x0 = s0.ln();
    let var = sigma * sigma * tau;
    let x_t = x0 + (drift - 0.5 * sigma * sigma) * tau + var.sqrt() * rng.normal();
    let u = rng.uniform();
    let gap = x_t - x0;
    let running_min = 0.5 * (x0 + x_t - (gap * gap - 2.0 * var * u.ln()).sqrt());
    let push = (b.ln() - running_min).max(0.0);
    (x_t + push).exp()
}

/// Plain GBM path with the exact lognormal update; the boundary is ignored
/// and `l` stays at zero.
pub fn simulate_gbm_path(params: &ModelParams, grid: &TimeGrid, seed: u64) -> Result<PathSample> {
    let params = validate_params(*params)?;
    let grid = grid.validate()?;
    Ok(gbm_path_unchecked(&params, &grid, seed, 0))
}

pub(crate) fn gbm_path_unchecked(
    params: &ModelParams,
    grid: &TimeGrid,
    seed: u64,
    path_index: u64,
) -> PathSample {
    let n = grid.n_steps;
    let dt = grid.dt();
    let log_drift = (params.mu - 0.5 * params.sigma * params.sigma) * dt;
    let vol = params.sigma * dt.sqrt();
    let mut rng = PathRng::new(seed, path_index);

    let mut s = Vec::with_capacity(n + 1);
    s.push(params.s0);
    let mut cur = params.s0;
    for _ in 0..n {
        cur *= (log_drift + vol * rng.normal()).exp();
        s.push(cur);
    }
    PathSample {
        times: grid.times(),
        s,
        l: vec![0.0; n + 1],
        dl: vec![0.0; n + 1],
        reflected: vec![false; n + 1],
        seed,
    }
}

/// `(1/eps) * sum_i 1{b < s_i <= b + eps} sigma^2 s_i^2 dt` over the left end
/// points of the grid. Converges to the local time at `b`, i.e. to `2 L_T`.
pub fn local_time_occupation_estimate(
    path: &PathSample,
    params: &ModelParams,
    epsilon: f64,
) -> Result<LocalTimeEstimate> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    let b = params.b;
    let var = params.sigma * params.sigma;
    let dt = path.dt();
    let occupation = crate::stats::compensated_sum(
        path.s[..path.s.len() - 1]
            .iter()
            .filter(|&&s| s > b && s <= b + epsilon)
            .map(|&s| var * s * s * dt),
    );
    Ok(LocalTimeEstimate { epsilon, value: occupation / epsilon })
}

/// Earliest grid time with `s_i <= level`.
pub fn first_passage_time(path: &PathSample, level: f64) -> Option<f64> {
    path.s.iter().position(|&s| s <= level).map(|i| path.times[i])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig1() -> ModelParams {
        ModelParams::figure1()
    }

    #[test]
    fn grid_rejects_bad_input() {
        assert!(TimeGrid::new(0.0, 1.0, 0).is_err());
        assert!(TimeGrid::new(1.0, 1.0, 10).is_err());
        assert!(TimeGrid::new(0.0, f64::NAN, 10).is_err());
        let g = TimeGrid::with_step(10.0, 1e-4).unwrap();
        assert_eq!(g.n_steps, 100_000);
        assert_eq!(g.time(g.n_steps), 10.0);
    }

    #[test]
    fn noiseless_path_is_geometric() {
        let params = ModelParams { mu: 0.1, ..fig1() };
        let grid = TimeGrid::new(0.0, 1.0, 1000).unwrap();
        let path = simulate_rgbm_path_scaled(&params, &grid, 3, 0.0).unwrap();
        let dt = grid.dt();
        for (i, s) in path.s.iter().enumerate() {
            let expected = 2.0 * (1.0 + 0.1 * dt).powi(i as i32);
            assert!((s - expected).abs() <= 1e-12 * expected);
        }
        assert!(path.l.iter().all(|&l| l == 0.0));
        assert!(path.reflected.iter().all(|&f| !f));
    }

    #[test]
    fn same_seed_same_path() {
        let grid = TimeGrid::new(0.0, 10.0, 5000).unwrap();
        let a = simulate_rgbm_path(&fig1(), &grid, 42).unwrap();
        let b = simulate_rgbm_path(&fig1(), &grid, 42).unwrap();
        assert_eq!(a, b);
        let c = simulate_rgbm_path(&fig1(), &grid, 43).unwrap();
        assert_ne!(a.s, c.s);
        let g1 = simulate_gbm_path(&fig1(), &grid, 42).unwrap();
        assert_eq!(g1, simulate_gbm_path(&fig1(), &grid, 42).unwrap());
    }

    #[test]
    fn skorokhod_invariants_hold() {
        let grid = TimeGrid::new(0.0, 10.0, 20_000).unwrap();
        for seed in 0..20 {
            let p = simulate_rgbm_path(&fig1(), &grid, seed).unwrap();
            assert_eq!(p.l[0], 0.0);
            for i in 0..p.n_steps() {
                assert!(p.s[i + 1] >= 1.0);
                assert!(p.l[i + 1] >= p.l[i]);
                assert_eq!(p.l[i + 1] > p.l[i], p.reflected[i + 1]);
                if p.reflected[i + 1] {
                    assert_eq!(p.s[i + 1], 1.0);
                }
            }
        }
    }

    #[test]
    fn terminal_kernel_matches_full_path() {
        let grid = TimeGrid::new(0.0, 10.0, 4000).unwrap();
        let p = fig1();
        let path = rgbm_path_unchecked(&p, &grid, 9, 5, 1.0);
        let mut rng = PathRng::new(9, 5);
        let (s, l) = rgbm_terminal_euler(p.s0, p.b, p.mu, p.sigma, &grid, &mut rng);
        assert_eq!(s, path.terminal_s());
        assert_eq!(l, path.terminal_l());
    }

    #[test]
    fn occupation_estimate_edge_cases() {
        let params = ModelParams { mu: 0.1, ..fig1() };
        let grid = TimeGrid::new(0.0, 1.0, 100).unwrap();
        let path = simulate_rgbm_path_scaled(&params, &grid, 0, 0.0).unwrap();
        let est = local_time_occupation_estimate(&path, &params, 0.5).unwrap();
        assert_eq!(est.value, 0.0);
        assert!(local_time_occupation_estimate(&path, &params, 0.0).is_err());
        assert!(local_time_occupation_estimate(&path, &params, -1.0).is_err());
    }

    #[test]
    fn first_passage_edge_cases() {
        let params = ModelParams { mu: 0.1, ..fig1() };
        let grid = TimeGrid::new(0.0, 1.0, 100).unwrap();
        let up = simulate_rgbm_path_scaled(&params, &grid, 0, 0.0).unwrap();
        assert_eq!(first_passage_time(&up, 1.0), None);
        assert_eq!(first_passage_time(&up, 2.0), Some(0.0));
    }

    #[test]
    fn passage_coincides_with_reflection() {
        let grid = TimeGrid::new(0.0, 10.0, 10_000).unwrap();
        for seed in 0..50 {
            let p = simulate_rgbm_path(&fig1(), &grid, seed).unwrap();
            assert_eq!(first_passage_time(&p, 1.0).is_some(), p.terminal_l() > 0.0);
        }
    }
}
