//! Shared parameter types and mathematical primitives.
//!
//! Time is measured in years and rates are continuously compounded, so the
//! bank account is `B_t = exp(r t)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The `(mu, sigma, b, r, q, s0)` tuple of the reflected GBM market.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Drift rate of the stock (1/year).
    pub mu: f64,
    /// Volatility (1/sqrt(year)).
    pub sigma: f64,
    /// Lower reflecting boundary.
    pub b: f64,
    /// Risk-free rate.
    pub r: f64,
    /// Deferment rate; plays the role of a dividend yield.
    #[serde(default)]
    pub q: f64,
    /// Initial price, `s0 >= b`.
    pub s0: f64,
}

impl ModelParams {
    pub fn new(mu: f64, sigma: f64, b: f64, r: f64, q: f64, s0: f64) -> Result<Self> {
        validate_params(ModelParams { mu, sigma, b, r, q, s0 })
    }

    pub fn validate(self) -> Result<Self> {
        validate_params(self)
    }

    /// Sample-path parameters: `mu = 0, sigma = 0.5, b = 1, s0 = 2`, zero rates.
    pub fn figure1() -> Self {
        ModelParams { mu: 0.0, sigma: 0.5, b: 1.0, r: 0.0, q: 0.0, s0: 2.0 }
    }

    /// Call-bound parameters: `r = 0.125, sigma = 0.5, b = 1` (theta = 1).
    /// The drift is set to `r`, the putative risk-neutral drift.
    pub fn figure2() -> Self {
        ModelParams { mu: 0.125, sigma: 0.5, b: 1.0, r: 0.125, q: 0.0, s0: 1.0 }
    }

    /// Put-bound parameters: `r = 0.02, sigma = 0.2, b = 1` (theta = 1).
    pub fn figure3() -> Self {
        ModelParams { mu: 0.02, sigma: 0.2, b: 1.0, r: 0.02, q: 0.0, s0: 1.0 }
    }

    /// NNEG parameters: `S = 1, r = 0, q = 0.03, sigma = 0.3, b = 0.5`.
    pub fn figure4() -> Self {
        ModelParams { mu: -0.03, sigma: 0.3, b: 0.5, r: 0.0, q: 0.03, s0: 1.0 }
    }

    /// `2 (r - q) / sigma^2`.
    pub fn theta(&self) -> f64 {
        theta_exponent(self.r, self.q, self.sigma)
    }
}

/// Checks every [`ModelParams`] invariant and hands the value back unchanged.
///
/// Non-finite fields are reported first, then volatility, boundary, start
/// level and finally the two rates.
pub fn validate_params(raw: ModelParams) -> Result<ModelParams> {
    let fields = [
        ("mu", raw.mu),
        ("sigma", raw.sigma),
        ("b", raw.b),
        ("r", raw.r),
        ("q", raw.q),
        ("s0", raw.s0),
    ];
    for (name, value) in fields {
        if !value.is_finite() {
            return Err(Error::NonFinite { name, value });
        }
    }
    if raw.sigma <= 0.0 {
        return Err(Error::SigmaNonpositive(raw.sigma));
    }
    if raw.b <= 0.0 {
        return Err(Error::BoundaryNonpositive(raw.b));
    }
    if raw.s0 < raw.b {
        return Err(Error::StartBelowBoundary { s0: raw.s0, b: raw.b });
    }
    if raw.r < 0.0 {
        return Err(Error::NegativeRate { name: "r", value: raw.r });
    }
    if raw.q < 0.0 {
        return Err(Error::NegativeRate { name: "q", value: raw.q });
    }
    Ok(raw)
}

/// Standard normal CDF, `Phi(x) = erfc(-x / sqrt 2) / 2`.
///
/// Absolute error is well below 1e-12 on the whole real line; the left tail
/// keeps full relative precision as well.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

/// Standard normal survival function `1 - Phi(x)`, computed without
/// cancellation.
pub fn norm_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x * std::f64::consts::FRAC_1_SQRT_2)
}

/// `Phi(a) - Phi(b)` without the cancellation that a naive difference
/// suffers when both arguments sit in the same tail.
pub fn norm_cdf_diff(a: f64, b: f64) -> f64 {
    if a > 0.0 && b > 0.0 {
        norm_sf(b) - norm_sf(a)
    } else {
        norm_cdf(a) - norm_cdf(b)
    }
}

/// `2 (r - q) / sigma^2`; the vanilla exponent is the `q = 0` case.
pub fn theta_exponent(r: f64, q: f64, sigma: f64) -> f64 {
    2.0 * (r - q) / (sigma * sigma)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptionKind {
    Call,
    Put,
    Nneg,
}

impl std::fmt::Display for OptionKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            OptionKind::Call => "call",
            OptionKind::Put => "put",
            OptionKind::Nneg => "nneg",
        })
    }
}

impl std::str::FromStr for OptionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "call" => Ok(OptionKind::Call),
            "put" => Ok(OptionKind::Put),
            "nneg" => Ok(OptionKind::Nneg),
            other => Err(Error::InvalidArgument(format!("unknown option kind '{other}'"))),
        }
    }
}

/// A European contract: kind, strike `K`, maturity `T` and valuation time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptionSpec {
    pub kind: OptionKind,
    pub strike: f64,
    pub maturity: f64,
    #[serde(default)]
    pub valuation_time: f64,
}

impl OptionSpec {
    pub fn new(kind: OptionKind, strike: f64, maturity: f64, valuation_time: f64) -> Self {
        OptionSpec { kind, strike, maturity, valuation_time }
    }

    /// Contract valued at `t = 0` with time to maturity `tau`.
    pub fn with_tau(kind: OptionKind, strike: f64, tau: f64) -> Self {
        OptionSpec::new(kind, strike, tau, 0.0)
    }

    /// Time to maturity `T - t`.
    pub fn tau(&self) -> f64 {
        self.maturity - self.valuation_time
    }

    /// Checks `0 <= t <= T` and a finite, non-negative strike.
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("strike", self.strike),
            ("maturity", self.maturity),
            ("valuation_time", self.valuation_time),
        ] {
            if !value.is_finite() {
                return Err(Error::NonFinite { name, value });
            }
        }
        if self.strike < 0.0 {
            return Err(Error::InvalidOption(format!("strike {} is negative", self.strike)));
        }
        if self.valuation_time < 0.0 || self.valuation_time > self.maturity {
            return Err(Error::InvalidOption(format!(
                "need 0 <= t <= T, got t = {} and T = {}",
                self.valuation_time, self.maturity
            )));
        }
        Ok(())
    }

    /// Intrinsic value at expiry.
    pub fn payoff(&self, s: f64) -> f64 {
        match self.kind {
            OptionKind::Call => (s - self.strike).max(0.0),
            OptionKind::Put | OptionKind::Nneg => (self.strike - s).max(0.0),
        }
    }
}

/// Which formula family a set of `z` arguments belongs to. The vanilla and
/// NNEG formulas reuse the names `z1..z4` for different expressions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZContext {
    Vanilla,
    Nneg,
}

/// Dimensionless arguments of the RGBM closed forms. `z2` only exists in the
/// NNEG family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PricingIntermediates {
    pub context: ZContext,
    pub z1: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z2: Option<f64>,
    pub z3: f64,
    pub z4: f64,
    pub theta: f64,
    pub tau: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cdf_at_zero_is_half() {
        assert_eq!(norm_cdf(0.0), 0.5);
    }

    #[test]
    fn cdf_symmetry_on_sampled_points() {
        for x in [0.1, 1.0, 3.0, 7.0] {
            assert!((norm_cdf(-x) + norm_cdf(x) - 1.0).abs() <= 1e-14, "x = {x}");
        }
    }

    #[test]
    fn cdf_diff_matches_tail_complement() {
        let (a, b) = (7.9, 6.8);
        let direct = norm_sf(b) - norm_sf(a);
        assert_eq!(norm_cdf_diff(a, b), direct);
        assert!(norm_cdf_diff(a, b) > 0.0);
        assert!((norm_cdf_diff(0.3, -0.2) - (norm_cdf(0.3) - norm_cdf(-0.2))).abs() < 1e-16);
    }

    #[test]
    fn theta_examples() {
        assert_eq!(theta_exponent(0.125, 0.0, 0.5), 1.0);
        assert_eq!(theta_exponent(0.04, 0.04, 0.3), 0.0);
        assert!((theta_exponent(0.0, 0.03, 0.3) + 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn figure_parameter_sets_validate() {
        for p in [
            ModelParams::figure1(),
            ModelParams::figure2(),
            ModelParams::figure3(),
            ModelParams::figure4(),
        ] {
            assert_eq!(validate_params(p), Ok(p));
        }
        assert!(ModelParams::new(0.0, 0.5, 1.0, 0.0, 0.0, 2.0).is_ok());
    }

    #[test]
    fn validation_error_codes() {
        let base = ModelParams::figure1();
        let code = |p: ModelParams| validate_params(p).unwrap_err().code();
        assert_eq!(code(ModelParams { sigma: 0.0, ..base }), "sigma_nonpositive");
        assert_eq!(code(ModelParams { b: -1.0, ..base }), "boundary_nonpositive");
        assert_eq!(code(ModelParams { s0: 0.5, ..base }), "start_below_boundary");
        assert_eq!(code(ModelParams { r: -0.01, ..base }), "negative_rate");
        assert_eq!(code(ModelParams { q: -0.01, ..base }), "negative_rate");
        assert_eq!(code(ModelParams { mu: f64::NAN, ..base }), "non_finite");
        assert_eq!(code(ModelParams { s0: f64::INFINITY, ..base }), "non_finite");
    }

    #[test]
    fn start_on_boundary_is_accepted() {
        let p = ModelParams { s0: 1.0, ..ModelParams::figure1() };
        assert!(validate_params(p).is_ok());
    }

    #[test]
    fn option_spec_checks() {
        assert!(OptionSpec::new(OptionKind::Call, 2.0, 1.0, 2.0).validate().is_err());
        assert!(OptionSpec::new(OptionKind::Call, -1.0, 1.0, 0.0).validate().is_err());
        let spec = OptionSpec::new(OptionKind::Put, 2.0, 10.0, 3.0);
        spec.validate().unwrap();
        assert_eq!(spec.tau(), 7.0);
        assert_eq!(spec.payoff(1.5), 0.5);
        assert_eq!("NNEG".parse::<OptionKind>().unwrap(), OptionKind::Nneg);
    }

    proptest! {
        #[test]
        fn cdf_monotone_and_bounded(x in -40.0f64..40.0, dx in 0.0f64..1.0) {
            let (lo, hi) = (norm_cdf(x), norm_cdf(x + dx));
            prop_assert!((0.0..=1.0).contains(&lo));
            prop_assert!(lo <= hi);
            prop_assert!((norm_cdf(x) + norm_cdf(-x) - 1.0).abs() <= 1e-14);
        }

        #[test]
        fn theta_antisymmetric(r in 0.0f64..0.2, q in 0.0f64..0.2, sigma in 0.05f64..1.0) {
            prop_assert_eq!(theta_exponent(r, q, sigma), -theta_exponent(q, r, sigma));
        }
    }
}
