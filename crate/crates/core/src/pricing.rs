//! Closed-form RGBM pricing functions, lognormal baselines and a Monte Carlo
//! pricer under reflected dynamics.
//!
//! The RGBM formulas are evaluated exactly as stated, including the
//! explicit `1/theta` correction terms. They are not guaranteed to respect
//! no-arbitrage bounds; [`crate::bounds`] audits them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    norm_cdf, norm_cdf_diff, theta_exponent, validate_params, ModelParams, OptionKind, OptionSpec,
    PricingIntermediates, ZContext,
};
use crate::rng::PathRng;
use crate::sim::{rgbm_terminal_euler, rgbm_terminal_exact, TimeGrid};
use crate::stats::mean_and_std_error;

/// Largest exponent magnitude accepted by [`ratio_pow`].
pub const MAX_LOG_POWER: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PricingMethod {
    RgbmFormula,
    BlackScholes,
    Black76,
    MonteCarlo,
}

impl std::fmt::Display for PricingMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PricingMethod::RgbmFormula => "rgbm_formula",
            PricingMethod::BlackScholes => "black_scholes",
            PricingMethod::Black76 => "black76",
            PricingMethod::MonteCarlo => "monte_carlo",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceQuote {
    pub value: f64,
    pub method: PricingMethod,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub intermediates: Option<PricingIntermediates>,
}

impl PriceQuote {
    fn new(value: f64, method: PricingMethod) -> Self {
        PriceQuote { value, method, intermediates: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_paths: usize,
    pub seed: u64,
}

impl MCEstimate {
    /// Distance to `value` in units of the standard error.
    pub fn z_score(&self, value: f64) -> f64 {
        (self.mean - value) / self.std_error
    }
}

/// `ratio^power` evaluated in log space, with the exponent clamped at
/// [`MAX_LOG_POWER`].
fn ratio_pow(ratio: f64, power: f64, what: &'static str) -> Result<f64> {
    let log_value = power * ratio.ln();
    if !log_value.is_finite() || log_value.abs() > MAX_LOG_POWER {
        return Err(Error::ExponentOutOfRange { what, log_value });
    }
    Ok(log_value.exp())
}

/// The vanilla (call/put) family of arguments with `theta = 2r / sigma^2`.
pub fn vanilla_intermediates(s: f64, k: f64, b: f64, tau: f64, r: f64, sigma: f64) -> PricingIntermediates {
    let vol = sigma * tau.sqrt();
    let carry = (r + 0.5 * sigma * sigma) * tau;
    PricingIntermediates {
        context: ZContext::Vanilla,
        z1: ((s / k).ln() + carry) / vol,
        z2: None,
        z3: ((b * b / (k * s)).ln() + carry) / vol,
        z4: ((b / s).ln() - (r - 0.5 * sigma * sigma) * tau) / vol,
        theta: theta_exponent(r, 0.0, sigma),
        tau,
    }
}

/// The NNEG family of arguments with `theta = 2(r - q) / sigma^2`. Not
/// interchangeable with [`vanilla_intermediates`]: `z3` and `z4` differ and
/// `z2` takes the role the vanilla `z3` plays.
pub fn nneg_intermediates(
    s: f64,
    k: f64,
    b: f64,
    tau: f64,
    r: f64,
    q: f64,
    sigma: f64,
) -> PricingIntermediates {
    let vol = sigma * tau.sqrt();
    let carry = (r - q + 0.5 * sigma * sigma) * tau;
    PricingIntermediates {
        context: ZContext::Nneg,
        z1: ((s / k).ln() + carry) / vol,
        z2: Some(((b * b / (k * s)).ln() + carry) / vol),
        z3: ((s / b).ln() + carry) / vol,
        z4: ((b / s).ln() + carry) / vol,
        theta: theta_exponent(r, q, sigma),
        tau,
    }
}

fn check_rgbm_domain(spec: &OptionSpec, expected: OptionKind, s: f64, params: &ModelParams) -> Result<()> {
    spec.validate()?;
    if spec.kind != expected {
        return Err(Error::InvalidOption(format!(
            "{expected} formula called with a {} contract",
            spec.kind
        )));
    }
    if !s.is_finite() || s < params.b {
        return Err(Error::InvalidOption(format!(
            "spot {s} must be finite and at or above the boundary {}",
            params.b
        )));
    }
    if spec.strike < params.b {
        return Err(Error::InvalidOption(format!(
            "strike {} must be at or above the boundary {}",
            spec.strike, params.b
        )));
    }
    Ok(())
}

fn model_for_formula(params: &ModelParams) -> Result<ModelParams> {
    // The formulas take the spot explicitly; s0 only has to be admissible.
    validate_params(ModelParams { s0: params.s0.max(params.b), ..*params })
}

/// RGBM European call,
///
/// ```text
/// C = S Phi(z1) - K e^{-r tau} Phi(z1 - sigma sqrt tau)
///     + (1/theta) [ S (b/S)^{1+theta} Phi(z3)
///                   - K e^{-r tau} (K/b)^{theta-1} Phi(z3 - theta sigma sqrt tau) ]
/// ```
pub fn rgbm_call(spec: &OptionSpec, s: f64, params: &ModelParams) -> Result<PriceQuote> {
    let params = model_for_formula(params)?;
    check_rgbm_domain(spec, OptionKind::Call, s, &params)?;
    let tau = spec.tau();
    if tau == 0.0 {
        return Ok(PriceQuote::new(spec.payoff(s), PricingMethod::RgbmFormula));
    }
    let (k, b, r, sigma) = (spec.strike, params.b, params.r, params.sigma);
    let z = vanilla_intermediates(s, k, b, tau, r, sigma);
    let theta = z.theta;
    if theta == 0.0 {
        return Err(Error::ThetaZeroUnsupported);
    }
    let vol = sigma * tau.sqrt();
    let disc = (-r * tau).exp();
    let s_term = s * ratio_pow(b / s, 1.0 + theta, "(b/S)^(1+theta)")?;
    let k_term = k * disc * ratio_pow(k / b, theta - 1.0, "(K/b)^(theta-1)")?;

    let value = s * norm_cdf(z.z1) - k * disc * norm_cdf(z.z1 - vol)
        + (s_term * norm_cdf(z.z3) - k_term * norm_cdf(z.z3 - theta * vol)) / theta;
    Ok(PriceQuote { value, method: PricingMethod::RgbmFormula, intermediates: Some(z) })
}

/// RGBM European put,
///
/// ```text
/// P = K e^{-r tau} Phi(-z1 + sigma sqrt tau) - b e^{-r tau} Phi(z4)
///     - S [ Phi(-z4 + sigma sqrt tau) - Phi(z1) ]
///     - (1/theta) [ S (b/S)^{1+theta} ( Phi(z4 + theta sigma sqrt tau) - Phi(z3) )
///                   - b e^{-r tau} Phi(z4)
///                   + K e^{-r tau} (K/b)^{theta-1} Phi(z3 - theta sigma sqrt tau) ]
/// ```
pub fn rgbm_put(spec: &OptionSpec, s: f64, params: &ModelParams) -> Result<PriceQuote> {
    let params = model_for_formula(params)?;
    check_rgbm_domain(spec, OptionKind::Put, s, &params)?;
    let tau = spec.tau();
    if tau == 0.0 {
        return Ok(PriceQuote::new(spec.payoff(s), PricingMethod::RgbmFormula));
    }
    let (k, b, r, sigma) = (spec.strike, params.b, params.r, params.sigma);
    let z = vanilla_intermediates(s, k, b, tau, r, sigma);
    let theta = z.theta;
    if theta == 0.0 {
        return Err(Error::ThetaZeroUnsupported);
    }
    let vol = sigma * tau.sqrt();
    let disc = (-r * tau).exp();
    let s_term = s * ratio_pow(b / s, 1.0 + theta, "(b/S)^(1+theta)")?;
    let k_term = k * disc * ratio_pow(k / b, theta - 1.0, "(K/b)^(theta-1)")?;
    let b_term = b * disc * norm_cdf(z.z4);

    let main = k * disc * norm_cdf(-z.z1 + vol) - b_term - s * norm_cdf_diff(-z.z4 + vol, z.z1);
    let correction = s_term * norm_cdf_diff(z.z4 + theta * vol, z.z3) - b_term
        + k_term * norm_cdf(z.z3 - theta * vol);
    let value = main - correction / theta;
    Ok(PriceQuote { value, method: PricingMethod::RgbmFormula, intermediates: Some(z) })
}

/// RGBM no-negative-equity guarantee with deferment rate `q`,
///
/// ```text
/// P = K e^{-r tau} Phi(-z1 + sigma sqrt tau) - S e^{-q tau} Phi(-z1)
///     - b e^{-r tau} Phi(-z3 + sigma sqrt tau) + S e^{-q tau} Phi(-z3)
///     + (1/theta) [ b e^{-r tau} Phi(-z3 + sigma sqrt tau)
///                   - S e^{-q tau} (b/S)^{1+theta} ( Phi(z4) - Phi(z2) )
///                   - K e^{-r tau} (K/b)^{theta-1} Phi(z2 - theta sigma sqrt tau) ]
/// ```
pub fn rgbm_nneg(spec: &OptionSpec, s: f64, params: &ModelParams) -> Result<PriceQuote> {
    let params = model_for_formula(params)?;
    check_rgbm_domain(spec, OptionKind::Nneg, s, &params)?;
    let tau = spec.tau();
    if tau == 0.0 {
        return Ok(PriceQuote::new(spec.payoff(s), PricingMethod::RgbmFormula));
    }
    let (k, b, r, q, sigma) = (spec.strike, params.b, params.r, params.q, params.sigma);
    let z = nneg_intermediates(s, k, b, tau, r, q, sigma);
    let theta = z.theta;
    if theta == 0.0 {
        return Err(Error::ThetaZeroUnsupported);
    }
    let z2 = z.z2.expect("nneg family carries z2");
    let vol = sigma * tau.sqrt();
    let disc = (-r * tau).exp();
    let disc_q = (-q * tau).exp();
    let s_term = s * disc_q * ratio_pow(b / s, 1.0 + theta, "(b/S)^(1+theta)")?;
    let k_term = k * disc * ratio_pow(k / b, theta - 1.0, "(K/b)^(theta-1)")?;
    let b_term = b * disc * norm_cdf(-z.z3 + vol);

    let main = k * disc * norm_cdf(-z.z1 + vol) - s * disc_q * norm_cdf(-z.z1) - b_term
        + s * disc_q * norm_cdf(-z.z3);
    let correction = b_term - s_term * norm_cdf_diff(z.z4, z2) - k_term * norm_cdf(z2 - theta * vol);
    let value = main + correction / theta;
    Ok(PriceQuote { value, method: PricingMethod::RgbmFormula, intermediates: Some(z) })
}

fn check_lognormal(spec: &OptionSpec, s: f64, sigma: f64) -> Result<()> {
    spec.validate()?;
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::InvalidOption(format!("spot must be positive, got {s}")));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::SigmaNonpositive(sigma));
    }
    Ok(())
}

/// `(d1, d2)` for spot `s` with carry `r - q`.
fn d1_d2(s: f64, k: f64, tau: f64, r: f64, q: f64, sigma: f64) -> (f64, f64) {
    let vol = sigma * tau.sqrt();
    let d1 = ((s / k).ln() + (r - q + 0.5 * sigma * sigma) * tau) / vol;
    (d1, d1 - vol)
}

/// Black-Scholes call on a non-dividend stock.
pub fn bs_call(spec: &OptionSpec, s: f64, r: f64, sigma: f64) -> Result<PriceQuote> {
    check_lognormal(spec, s, sigma)?;
    let tau = spec.tau();
    if tau == 0.0 {
        return Ok(PriceQuote::new((s - spec.strike).max(0.0), PricingMethod::BlackScholes));
    }
    let k = spec.strike;
    let (d1, d2) = d1_d2(s, k, tau, r, 0.0, sigma);
    let value = s * norm_cdf(d1) - k * (-r * tau).exp() * norm_cdf(d2);
    Ok(PriceQuote::new(value, PricingMethod::BlackScholes))
}

/// Black-Scholes put on a non-dividend stock.
pub fn bs_put(spec: &OptionSpec, s: f64, r: f64, sigma: f64) -> Result<PriceQuote> {
    check_lognormal(spec, s, sigma)?;
    let tau = spec.tau();
    if tau == 0.0 {
        return Ok(PriceQuote::new((spec.strike - s).max(0.0), PricingMethod::BlackScholes));
    }
    let k = spec.strike;
    let (d1, d2) = d1_d2(s, k, tau, r, 0.0, sigma);
    let value = k * (-r * tau).exp() * norm_cdf(-d2) - s * norm_cdf(-d1);
    Ok(PriceQuote::new(value, PricingMethod::BlackScholes))
}

/// Black-76 put on the deferment-discounted forward `s e^{-q tau}`:
/// `K e^{-r tau} Phi(-d2) - s e^{-q tau} Phi(-d1)`.
pub fn black76_put(spec: &OptionSpec, s: f64, r: f64, q: f64, sigma: f64) -> Result<PriceQuote> {
    check_lognormal(spec, s, sigma)?;
    let tau = spec.tau();
    if tau == 0.0 {
        return Ok(PriceQuote::new((spec.strike - s).max(0.0), PricingMethod::Black76));
    }
    let k = spec.strike;
    let (d1, d2) = d1_d2(s, k, tau, r, q, sigma);
    let value = k * (-r * tau).exp() * norm_cdf(-d2) - s * (-q * tau).exp() * norm_cdf(-d1);
    Ok(PriceQuote::new(value, PricingMethod::Black76))
}

/// How [`mc_price_with`] draws the terminal price.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "scheme")]
pub enum McScheme {
    /// Projected Euler scheme on the grid, as in [`crate::sim`].
    Euler { grid: TimeGrid },
    /// Exact terminal law of the reflected process (one normal and one
    /// uniform per path).
    ExactTerminal,
}

/// Monte Carlo price under reflected GBM with drift `r` (call/put) or
/// `r - q` (NNEG), reflecting at `b`, discounted at `r`, on the projected
/// Euler scheme.
///
/// The grid must span the contract's `[t, T]`. Path `k` draws from stream `k`
/// under `seed` and payoffs are reduced in path order, so the estimate is
/// bit-identical for any thread count.
pub fn mc_price(
    spec: &OptionSpec,
    s: f64,
    params: &ModelParams,
    n_paths: usize,
    grid: &TimeGrid,
    seed: u64,
) -> Result<MCEstimate> {
    mc_price_with(spec, s, params, n_paths, McScheme::Euler { grid: *grid }, seed)
}

pub fn mc_price_with(
    spec: &OptionSpec,
    s: f64,
    params: &ModelParams,
    n_paths: usize,
    scheme: McScheme,
    seed: u64,
) -> Result<MCEstimate> {
    spec.validate()?;
    let params = validate_params(ModelParams { s0: s, ..*params })?;
    if n_paths < 2 {
        return Err(Error::InvalidArgument(format!("n_paths must be at least 2, got {n_paths}")));
    }
    let tau = spec.tau();
    let drift = match spec.kind {
        OptionKind::Nneg => params.r - params.q,
        OptionKind::Call | OptionKind::Put => params.r,
    };
    let disc = (-params.r * tau).exp();
    let (b, sigma) = (params.b, params.sigma);

    if tau == 0.0 {
        let v = spec.payoff(s);
        return Ok(MCEstimate { mean: v, std_error: 0.0, n_paths, seed });
    }

    let payoffs: Vec<f64> = match scheme {
        McScheme::Euler { grid } => {
            let grid = grid.validate()?;
            let span = grid.horizon - grid.t0;
            if (span - tau).abs() > 1e-12 * tau.max(1.0) {
                return Err(Error::InvalidGrid(format!(
                    "grid spans {span} but the contract has {tau} to maturity"
                )));
            }
            (0..n_paths as u64)
                .into_par_iter()
                .map(|k| {
                    let mut rng = PathRng::new(seed, k);
                    let (s_t, _) = rgbm_terminal_euler(s, b, drift, sigma, &grid, &mut rng);
                    disc * spec.payoff(s_t)
                })
                .collect()
        }
        McScheme::ExactTerminal => (0..n_paths as u64)
            .into_par_iter()
            .map(|k| {
                let mut rng = PathRng::new(seed, k);
                disc * spec.payoff(rgbm_terminal_exact(s, b, drift, sigma, tau, &mut rng))
            })
            .collect(),
    };
    let (mean, std_error) = mean_and_std_error(&payoffs);
    Ok(MCEstimate { mean, std_error, n_paths, seed })
}

/// Dispatches to the RGBM formula matching the contract kind.
pub fn rgbm_price(spec: &OptionSpec, s: f64, params: &ModelParams) -> Result<PriceQuote> {
    match spec.kind {
        OptionKind::Call => rgbm_call(spec, s, params),
        OptionKind::Put => rgbm_put(spec, s, params),
        OptionKind::Nneg => rgbm_nneg(spec, s, params),
    }
}

/// Lognormal baseline for the contract: Black-Scholes for calls and puts,
/// Black-76 with deferment for NNEGs.
pub fn baseline_price(spec: &OptionSpec, s: f64, params: &ModelParams) -> Result<PriceQuote> {
    match spec.kind {
        OptionKind::Call => bs_call(spec, s, params.r, params.sigma),
        OptionKind::Put => bs_put(spec, s, params.r, params.sigma),
        OptionKind::Nneg => black76_put(spec, s, params.r, params.q, params.sigma),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(k: f64, tau: f64) -> OptionSpec {
        OptionSpec::with_tau(OptionKind::Call, k, tau)
    }
    fn put(k: f64, tau: f64) -> OptionSpec {
        OptionSpec::with_tau(OptionKind::Put, k, tau)
    }
    fn nneg(k: f64, tau: f64) -> OptionSpec {
        OptionSpec::with_tau(OptionKind::Nneg, k, tau)
    }

    #[test]
    fn expiry_values() {
        let p2 = ModelParams::figure2();
        assert_eq!(rgbm_call(&call(2.0, 0.0), 1.5, &p2).unwrap().value, 0.0);
        assert_eq!(rgbm_put(&put(2.0, 0.0), 1.5, &p2).unwrap().value, 0.5);
        assert_eq!(rgbm_nneg(&nneg(0.9, 0.0), 0.6, &ModelParams::figure4()).unwrap().value, 0.9 - 0.6);
        assert_eq!(black76_put(&nneg(2.0, 0.0), 1.5, 0.0, 0.03, 0.3).unwrap().value, 0.5);
    }

    #[test]
    fn zero_theta_is_rejected() {
        let p = ModelParams { r: 0.0, ..ModelParams::figure2() };
        assert_eq!(rgbm_call(&call(2.0, 1.0), 1.5, &p), Err(Error::ThetaZeroUnsupported));
        assert_eq!(rgbm_put(&put(2.0, 1.0), 1.5, &p), Err(Error::ThetaZeroUnsupported));
        let p = ModelParams { r: 0.03, q: 0.03, ..ModelParams::figure4() };
        assert_eq!(rgbm_nneg(&nneg(0.9, 1.0), 1.0, &p), Err(Error::ThetaZeroUnsupported));
    }

    #[test]
    fn domain_errors() {
        let p = ModelParams::figure2();
        assert!(rgbm_call(&call(0.5, 1.0), 1.5, &p).unwrap_err().is_pricing_domain());
        assert!(rgbm_call(&call(2.0, 1.0), 0.9, &p).unwrap_err().is_pricing_domain());
        assert!(rgbm_call(&put(2.0, 1.0), 1.5, &p).unwrap_err().is_pricing_domain());
        assert!(bs_call(&call(2.0, 1.0), 0.0, 0.0, 0.2).is_err());
        assert!(bs_call(&call(2.0, 1.0), 1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn extreme_theta_hits_the_clamp() {
        let p = ModelParams { r: 5.0, sigma: 0.01, ..ModelParams::figure2() };
        let err = rgbm_call(&call(2.0, 1.0), 1.0e3, &p).unwrap_err();
        assert_eq!(err.code(), "exponent_out_of_range");
    }

    #[test]
    fn bs_reference_value() {
        // mpmath, 40 digits: 10.45058357218556734600...
        let v = bs_call(&call(100.0, 1.0), 100.0, 0.05, 0.2).unwrap().value;
        assert!((v - 10.450_583_572_185_567).abs() < 1e-10);
    }

    #[test]
    fn bs_degenerate_strike() {
        let v = bs_call(&call(1e-300, 1.0), 3.0, 0.05, 0.2).unwrap().value;
        assert!((v - 3.0).abs() < 1e-12);
        let v = bs_call(&call(0.0, 1.0), 3.0, 0.05, 0.2).unwrap().value;
        assert_eq!(v, 3.0);
    }

    #[test]
    fn black76_reduces_to_bs_put() {
        for (s, k, tau) in [(1.0, 2.0, 10.0), (100.0, 90.0, 0.5), (1.3, 1.0, 3.0)] {
            let a = black76_put(&put(k, tau), s, 0.03, 0.0, 0.25).unwrap().value;
            let b = bs_put(&put(k, tau), s, 0.03, 0.25).unwrap().value;
            assert_eq!(a, b);
        }
    }

    #[test]
    fn intermediates_are_context_specific() {
        let v = vanilla_intermediates(1.2, 1.5, 1.0, 3.0, 0.05, 0.3);
        let n = nneg_intermediates(1.2, 1.5, 1.0, 3.0, 0.05, 0.0, 0.3);
        assert_eq!(v.context, ZContext::Vanilla);
        assert_eq!(n.context, ZContext::Nneg);
        assert!(v.z2.is_none());
        assert_eq!(v.z1, n.z1);
        assert_eq!(v.z3, n.z2.unwrap());
        assert_ne!(v.z4, n.z4);
        assert_eq!(v.theta, n.theta);
    }

    #[test]
    fn mc_zero_payoff_without_noise() {
        // Deterministic drift-free path would sit at s; a call struck far above
        // every attainable terminal value pays nothing.
        let p = ModelParams { sigma: 1e-9, r: 0.01, ..ModelParams::figure2() };
        let grid = TimeGrid::new(0.0, 1.0, 100).unwrap();
        let est = mc_price(&call(10.0, 1.0), 1.5, &p, 64, &grid, 3).unwrap();
        assert_eq!(est.mean, 0.0);
        assert_eq!(est.std_error, 0.0);
    }

    #[test]
    fn mc_rejects_bad_inputs() {
        let p = ModelParams::figure2();
        let grid = TimeGrid::new(0.0, 1.0, 100).unwrap();
        assert!(mc_price(&call(2.0, 1.0), 1.5, &p, 1, &grid, 0).is_err());
        assert!(mc_price(&call(2.0, 2.0), 1.5, &p, 10, &grid, 0).is_err());
        assert!(mc_price(&call(2.0, 1.0), 0.5, &p, 10, &grid, 0).is_err());
    }
}
