//! Model-independent no-arbitrage bounds and violation sweeps.
//!
//! Any equivalent risk-neutral measure forces
//!
//! ```text
//! C(t, S) <= S
//! P(t, S) >= K e^{-r tau} - S
//! NNEG(t, S) >= K e^{-r tau} - S e^{-q tau}
//! ```
//!
//! A price on the wrong side of one of these by more than
//! [`VIOLATION_TOLERANCE`] is flagged.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelParams, OptionKind, OptionSpec};
use crate::pricing::rgbm_price;

/// Absolute tolerance, in money units, before a bound counts as violated.
pub const VIOLATION_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    CallUpper,
    PutLower,
    NnegLower,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundVerdict {
    pub kind: BoundKind,
    pub bound_value: f64,
    pub price: f64,
    /// Signed distance past the bound; positive means violated.
    pub margin: f64,
    pub violated: bool,
}

impl BoundVerdict {
    fn upper(kind: BoundKind, price: f64, bound_value: f64) -> Self {
        let margin = price - bound_value;
        BoundVerdict { kind, bound_value, price, margin, violated: margin > VIOLATION_TOLERANCE }
    }

    fn lower(kind: BoundKind, price: f64, bound_value: f64) -> Self {
        let margin = bound_value - price;
        BoundVerdict { kind, bound_value, price, margin, violated: margin > VIOLATION_TOLERANCE }
    }
}

/// `C <= S`.
pub fn check_call_upper(price: f64, s: f64) -> BoundVerdict {
    BoundVerdict::upper(BoundKind::CallUpper, price, s)
}

/// `P >= K e^{-r tau} - S`.
pub fn check_put_lower(price: f64, s: f64, k: f64, r: f64, tau: f64) -> BoundVerdict {
    BoundVerdict::lower(BoundKind::PutLower, price, k * (-r * tau).exp() - s)
}

/// `P >= K e^{-r tau} - S e^{-q tau}`.
pub fn check_nneg_lower(price: f64, s: f64, k: f64, r: f64, q: f64, tau: f64) -> BoundVerdict {
    BoundVerdict::lower(BoundKind::NnegLower, price, k * (-r * tau).exp() - s * (-q * tau).exp())
}

/// Verdict for a contract of any kind against its own bound.
pub fn check_bound(spec: &OptionSpec, price: f64, s: f64, params: &ModelParams) -> BoundVerdict {
    let tau = spec.tau();
    match spec.kind {
        OptionKind::Call => check_call_upper(price, s),
        OptionKind::Put => check_put_lower(price, s, spec.strike, params.r, tau),
        OptionKind::Nneg => check_nneg_lower(price, s, spec.strike, params.r, params.q, tau),
    }
}

/// Long-maturity limit of the RGBM NNEG price,
/// `K + (b / theta) (1 - theta - (K/b)^theta)`. Independent of the spot and
/// of the valuation time.
pub fn nneg_asymptote(k: f64, b: f64, theta: f64) -> Result<f64> {
    if theta == 0.0 {
        return Err(Error::ThetaZeroUnsupported);
    }
    if !(b > 0.0) {
        return Err(Error::BoundaryNonpositive(b));
    }
    if k < b {
        return Err(Error::InvalidOption(format!("strike {k} below the boundary {b}")));
    }
    Ok(k + b / theta * (1.0 - theta - (k / b).powf(theta)))
}

/// Which bound a sweep probes: call upper (prop33), put lower (prop34) or
/// long-dated NNEG lower (prop35).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepTarget {
    /// Call upper bound near the boundary.
    Prop33,
    /// Put lower bound near the boundary.
    Prop34,
    /// Long-dated NNEG lower bound.
    Prop35,
}

impl SweepTarget {
    pub fn kind(&self) -> OptionKind {
        match self {
            SweepTarget::Prop33 => OptionKind::Call,
            SweepTarget::Prop34 => OptionKind::Put,
            SweepTarget::Prop35 => OptionKind::Nneg,
        }
    }
}

impl std::str::FromStr for SweepTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "prop33" => Ok(SweepTarget::Prop33),
            "prop34" => Ok(SweepTarget::Prop34),
            "prop35" => Ok(SweepTarget::Prop35),
            other => Err(Error::InvalidArgument(format!("unknown sweep target '{other}'"))),
        }
    }
}

/// A parameter that a sweep axis can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisParam {
    Spot,
    Strike,
    Rate,
    Sigma,
    Tau,
    Deferment,
    Boundary,
}

impl AxisParam {
    pub fn name(&self) -> &'static str {
        match self {
            AxisParam::Spot => "spot",
            AxisParam::Strike => "strike",
            AxisParam::Rate => "rate",
            AxisParam::Sigma => "sigma",
            AxisParam::Tau => "tau",
            AxisParam::Deferment => "deferment",
            AxisParam::Boundary => "boundary",
        }
    }
}

impl std::str::FromStr for AxisParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "spot" | "s" => AxisParam::Spot,
            "strike" | "k" => AxisParam::Strike,
            "rate" | "r" => AxisParam::Rate,
            "sigma" => AxisParam::Sigma,
            "tau" | "maturity" | "t" => AxisParam::Tau,
            "deferment" | "q" => AxisParam::Deferment,
            "boundary" | "b" => AxisParam::Boundary,
            other => return Err(Error::InvalidArgument(format!("unknown sweep axis '{other}'"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepAxis {
    pub param: AxisParam,
    pub values: Vec<f64>,
}

impl SweepAxis {
    pub fn new(param: AxisParam, values: Vec<f64>) -> Self {
        SweepAxis { param, values }
    }

    /// `n` evenly spaced points on `[lo, hi]`.
    pub fn linspace(param: AxisParam, lo: f64, hi: f64, n: usize) -> Self {
        let values = match n {
            0 => vec![],
            1 => vec![lo],
            _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
        };
        SweepAxis { param, values }
    }
}

/// Everything a sweep cell starts from before axis overrides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepBase {
    pub params: ModelParams,
    pub spot: f64,
    pub strike: f64,
    pub tau: f64,
    /// For the call and put targets, tie `sigma = sqrt(2 r)` (theta = 1)
    /// whenever the rate is swept and sigma is not.
    pub lock_theta_one: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CellOutcome {
    Priced { price: f64, bound: f64, margin: f64, violated: bool },
    /// The formula is undefined here (e.g. theta = 0); not counted as clean.
    Undefined { code: String },
}

impl CellOutcome {
    pub fn is_violated(&self) -> bool {
        matches!(self, CellOutcome::Priced { violated: true, .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    /// One value per axis, in axis order.
    pub coords: Vec<f64>,
    pub outcome: CellOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub target: SweepTarget,
    pub axes: Vec<SweepAxis>,
    /// Cells in row-major order over `axes` (last axis fastest).
    pub cells: Vec<SweepCell>,
    pub violated_count: usize,
    pub undefined_count: usize,
    pub first_violation: Option<Vec<f64>>,
    /// NNEG target only: maturity beyond which the sampled prices stay below the
    /// bound, refined by bisection to [`CROSSING_TOLERANCE`].
    pub crossing_tau: Option<f64>,
}

impl SweepResult {
    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.values.len()).collect()
    }
}

/// Bisection tolerance for the NNEG bound-crossing maturity, in years.
pub const CROSSING_TOLERANCE: f64 = 1e-3;

fn cell_inputs(base: &SweepBase, target: SweepTarget, axes: &[SweepAxis], coords: &[f64]) -> (OptionSpec, f64, ModelParams) {
    let mut params = base.params;
    let (mut s, mut k, mut tau) = (base.spot, base.strike, base.tau);
    let mut sigma_swept = false;
    let mut rate_swept = false;
    for (axis, &v) in axes.iter().zip(coords) {
        match axis.param {
            AxisParam::Spot => s = v,
            AxisParam::Strike => k = v,
            AxisParam::Rate => {
                params.r = v;
                rate_swept = true;
            }
            AxisParam::Sigma => {
                params.sigma = v;
                sigma_swept = true;
            }
            AxisParam::Tau => tau = v,
            AxisParam::Deferment => params.q = v,
            AxisParam::Boundary => params.b = v,
        }
    }
    if base.lock_theta_one && rate_swept && !sigma_swept && target != SweepTarget::Prop35 {
        params.sigma = (2.0 * params.r).sqrt();
    }
    (OptionSpec::with_tau(target.kind(), k, tau), s, params)
}

fn evaluate_cell(spec: &OptionSpec, s: f64, params: &ModelParams) -> CellOutcome {
    match rgbm_price(spec, s, params) {
        Ok(q) => {
            let v = check_bound(spec, q.value, s, params);
            CellOutcome::Priced { price: q.value, bound: v.bound_value, margin: v.margin, violated: v.violated }
        }
        Err(e) => CellOutcome::Undefined { code: e.code().to_string() },
    }
}

/// Prices the target contract over the Cartesian product of `axes` and
/// records a bound verdict per cell. Pricing failures mark the cell
/// undefined and do not abort the sweep.
pub fn violation_sweep(target: SweepTarget, axes: &[SweepAxis], base: &SweepBase) -> Result<SweepResult> {
    if axes.is_empty() || axes.iter().any(|a| a.values.is_empty()) {
        return Err(Error::InvalidArgument("sweep axes must be non-empty".into()));
    }
    let shape: Vec<usize> = axes.iter().map(|a| a.values.len()).collect();
    let total: usize = shape.iter().product();

    let cells: Vec<SweepCell> = (0..total)
        .into_par_iter()
        .map(|flat| {
            let coords = unravel(flat, &shape)
                .iter()
                .zip(axes)
                .map(|(&i, a)| a.values[i])
                .collect::<Vec<_>>();
            let (spec, s, params) = cell_inputs(base, target, axes, &coords);
            let outcome = evaluate_cell(&spec, s, &params);
            SweepCell { coords, outcome }
        })
        .collect();

    let violated_count = cells.iter().filter(|c| c.outcome.is_violated()).count();
    let undefined_count = cells.iter().filter(|c| matches!(c.outcome, CellOutcome::Undefined { .. })).count();
    let first_violation = cells.iter().find(|c| c.outcome.is_violated()).map(|c| c.coords.clone());

    let crossing_tau = if target == SweepTarget::Prop35 {
        crossing_from_cells(axes, &cells, base)
    } else {
        None
    };

    Ok(SweepResult {
        target,
        axes: axes.to_vec(),
        cells,
        violated_count,
        undefined_count,
        first_violation,
        crossing_tau,
    })
}

fn unravel(mut flat: usize, shape: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; shape.len()];
    for (slot, &n) in idx.iter_mut().zip(shape).rev() {
        *slot = flat % n;
        flat /= n;
    }
    idx
}

/// On a single tau axis: find the last clean cell followed only by violated
/// cells and bisect between it and its successor.
fn crossing_from_cells(axes: &[SweepAxis], cells: &[SweepCell], base: &SweepBase) -> Option<f64> {
    if axes.len() != 1 || axes[0].param != AxisParam::Tau {
        return None;
    }
    let first_tail = cells.iter().rposition(|c| !c.outcome.is_violated()).map_or(0, |i| i + 1);
    if first_tail == cells.len() {
        return None;
    }
    if first_tail == 0 {
        return Some(cells[0].coords[0]);
    }
    let lo = cells[first_tail - 1].coords[0];
    let hi = cells[first_tail].coords[0];
    nneg_crossing_maturity(&base.params, base.spot, base.strike, lo, hi).ok()
}

/// NNEG bound margin `bound - price` as a function of time to maturity.
pub fn nneg_margin(params: &ModelParams, s: f64, k: f64, tau: f64) -> Result<f64> {
    let spec = OptionSpec::with_tau(OptionKind::Nneg, k, tau);
    let price = rgbm_price(&spec, s, params)?.value;
    Ok(check_nneg_lower(price, s, k, params.r, params.q, tau).margin)
}

/// Bisection on the NNEG margin over `[lo, hi]`, which must bracket a sign
/// change from clean (margin <= 0) to violated (margin > 0).
pub fn nneg_crossing_maturity(params: &ModelParams, s: f64, k: f64, lo: f64, hi: f64) -> Result<f64> {
    let (mut lo, mut hi) = (lo, hi);
    let m_lo = nneg_margin(params, s, k, lo)?;
    let m_hi = nneg_margin(params, s, k, hi)?;
    if !(m_lo <= 0.0 && m_hi > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "[{lo}, {hi}] does not bracket a crossing (margins {m_lo}, {m_hi})"
        )));
    }
    while hi - lo > CROSSING_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if nneg_margin(params, s, k, mid)? > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Largest `delta` on a scan of `(b, b + max_offset]` such that the
/// contract's bound is violated for every scanned spot in `[b, b + delta]`,
/// refined by bisection to `tol`. `None` when the bound holds at `s = b`.
pub fn boundary_violation_extent(
    spec: &OptionSpec,
    params: &ModelParams,
    max_offset: f64,
    tol: f64,
) -> Result<Option<f64>> {
    let b = params.b;
    let violated_at = |s: f64| -> Result<bool> {
        let price = rgbm_price(spec, s, params)?.value;
        Ok(check_bound(spec, price, s, params).violated)
    };
    if !violated_at(b)? {
        return Ok(None);
    }
    let n = 1000;
    let mut last_ok = 0.0;
    for i in 1..=n {
        let off = max_offset * i as f64 / n as f64;
        if !violated_at(b + off)? {
            let (mut lo, mut hi) = (last_ok, off);
            while hi - lo > tol {
                let mid = 0.5 * (lo + hi);
                if violated_at(b + mid)? {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Ok(Some(lo));
        }
        last_ok = off;
    }
    Ok(Some(max_offset))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn call_upper_examples() {
        assert!(!check_call_upper(0.5, 1.0).violated);
        assert!(!check_call_upper(1.0, 1.0).violated);
        let v = check_call_upper(1.368, 1.0);
        assert!(v.violated);
        assert!((v.margin - 0.368).abs() < 1e-12);
    }

    #[test]
    fn put_lower_examples() {
        let v = check_put_lower(0.0, 10.0, 2.0, 0.02, 10.0);
        assert!(v.bound_value < 0.0 && !v.violated);
        let bound = 2.0 * (-0.2f64).exp() - 1.0;
        assert!(!check_put_lower(bound, 1.0, 2.0, 0.02, 10.0).violated);
        assert!(check_put_lower(0.36, 1.0, 2.0, 0.02, 10.0).violated);
    }

    #[test]
    fn nneg_lower_examples() {
        let v = check_nneg_lower(0.16, 1.0, 0.9, 0.0, 0.03, 20.0);
        assert!((v.bound_value - (0.9 - (-0.6f64).exp())).abs() < 1e-15);
        assert!(v.violated);
        let a = check_nneg_lower(0.3, 1.0, 2.0, 0.02, 0.0, 10.0);
        let b = check_put_lower(0.3, 1.0, 2.0, 0.02, 10.0);
        assert_eq!(a.bound_value, b.bound_value);
        assert_eq!(a.violated, b.violated);
        for s in [0.5, 0.9, 1.3] {
            let v = check_nneg_lower((0.9f64 - s).max(0.0), s, 0.9, 0.0, 0.03, 0.0);
            assert!(!v.violated);
        }
    }

    #[test]
    fn tolerance_is_respected() {
        assert!(!check_call_upper(1.0 + 5e-13, 1.0).violated);
        assert!(check_call_upper(1.0 + 2e-12, 1.0).violated);
    }

    #[test]
    fn asymptote_examples() {
        assert!(nneg_asymptote(0.7, 0.7, -0.5).unwrap().abs() < 1e-15);
        let a = nneg_asymptote(0.9, 0.5, -2.0 / 3.0).unwrap();
        // mpmath: 0.156850166297783362...
        assert!((a - 0.156_850_166_297_783_4).abs() < 1e-12);
        assert!(a < 0.9);
        assert_eq!(nneg_asymptote(0.9, 0.5, 0.0), Err(Error::ThetaZeroUnsupported));
    }

    #[test]
    fn unravel_row_major() {
        assert_eq!(unravel(5, &[2, 3]), vec![1, 2]);
        assert_eq!(unravel(3, &[2, 3]), vec![1, 0]);
    }

    #[test]
    fn empty_axes_rejected() {
        let base = SweepBase {
            params: ModelParams::figure2(),
            spot: 1.0,
            strike: 2.0,
            tau: 10.0,
            lock_theta_one: true,
        };
        assert!(violation_sweep(SweepTarget::Prop33, &[], &base).is_err());
        let axes = [SweepAxis::new(AxisParam::Strike, vec![])];
        assert!(violation_sweep(SweepTarget::Prop33, &axes, &base).is_err());
    }

    #[test]
    fn theta_zero_cells_are_undefined() {
        let base = SweepBase {
            params: ModelParams::figure2(),
            spot: 1.0,
            strike: 2.0,
            tau: 10.0,
            lock_theta_one: false,
        };
        let axes = [SweepAxis::new(AxisParam::Rate, vec![0.0, 0.125])];
        let res = violation_sweep(SweepTarget::Prop33, &axes, &base).unwrap();
        assert_eq!(res.undefined_count, 1);
        assert!(matches!(&res.cells[0].outcome, CellOutcome::Undefined { code } if code == "theta_zero_unsupported"));
        assert!(res.cells[1].outcome.is_violated());
    }
}
