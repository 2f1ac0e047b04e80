//! Run configuration: a JSON file, overridden field by field by flags, then
//! completed with per-command defaults. The completed value is what gets
//! echoed to `config.json`.

use std::path::{Path, PathBuf};

use rgbm_core::bounds::{AxisParam, SweepAxis, SweepTarget};
use rgbm_core::{ModelParams, OptionKind};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

fn is_default<T: Default + PartialEq>(v: &T) -> bool {
    *v == T::default()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "is_default")]
    pub model: ModelSection,
    #[serde(skip_serializing_if = "is_default")]
    pub grid: GridSection,
    #[serde(skip_serializing_if = "is_default")]
    pub simulate: SimulateSection,
    #[serde(skip_serializing_if = "is_default")]
    pub arb: ArbSection,
    #[serde(skip_serializing_if = "is_default")]
    pub price: PriceSection,
    #[serde(skip_serializing_if = "is_default")]
    pub figure: FigureSection,
    #[serde(skip_serializing_if = "is_default")]
    pub sweep: SweepSection,
}

/// Model parameters. `preset` picks one of the four figure parameter sets;
/// explicit fields override it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s0: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    /// Number of consecutive seeds to simulate.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub paths: Option<usize>,
    /// How many of those get a `path_<seed>.csv`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dump: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub figure: Option<u8>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArbSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seeds: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostic_paths: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Rgbm,
    Baseline,
    Mc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SchemeName {
    Euler,
    Exact,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriceSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<OptionKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strike: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub maturity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub valuation_time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spot: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub methods: Option<Vec<Method>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc_paths: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc_steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc_scheme: Option<SchemeName>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FigureSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub index: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
}

/// An axis given either as explicit `values` or as `lo`, `hi`, `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub param: AxisParam,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
}

impl AxisSpec {
    /// Parses `name=v1,v2,...` or `name:lo:hi:n`.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let bad = || CliError::Usage(format!("axis '{text}' is neither name=v1,v2 nor name:lo:hi:n"));
        if let Some((name, list)) = text.split_once('=') {
            let values = list
                .split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|_| bad()))
                .collect::<Result<Vec<_>, _>>()?;
            return Ok(AxisSpec { param: parse_axis(name)?, values: Some(values), lo: None, hi: None, n: None });
        }
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 4 {
            return Err(bad());
        }
        Ok(AxisSpec {
            param: parse_axis(parts[0])?,
            values: None,
            lo: Some(parts[1].parse().map_err(|_| bad())?),
            hi: Some(parts[2].parse().map_err(|_| bad())?),
            n: Some(parts[3].parse().map_err(|_| bad())?),
        })
    }

    /// Expands to explicit values, which is also the echoed form.
    pub fn resolve(&mut self) -> Result<SweepAxis, CliError> {
        let values = match (&self.values, self.lo, self.hi, self.n) {
            (Some(v), None, None, None) => v.clone(),
            (None, Some(lo), Some(hi), Some(n)) => SweepAxis::linspace(self.param, lo, hi, n).values,
            _ => return Err(CliError::Usage(format!("axis {} needs either values or lo/hi/n", self.param.name()))),
        };
        if values.is_empty() {
            return Err(CliError::Usage(format!("axis {} has no values", self.param.name())));
        }
        *self = AxisSpec { param: self.param, values: Some(values.clone()), lo: None, hi: None, n: None };
        Ok(SweepAxis::new(self.param, values))
    }
}

fn parse_axis(name: &str) -> Result<AxisParam, CliError> {
    name.trim().parse().map_err(CliError::from)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<SweepTarget>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub axes: Option<Vec<AxisSpec>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spot: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strike: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lock_theta_one: Option<bool>,
}

pub fn preset(index: u8) -> Result<ModelParams, CliError> {
    match index {
        1 => Ok(ModelParams::figure1()),
        2 => Ok(ModelParams::figure2()),
        3 => Ok(ModelParams::figure3()),
        4 => Ok(ModelParams::figure4()),
        other => Err(CliError::Usage(format!("preset must be 1, 2, 3 or 4, got {other}"))),
    }
}

impl ModelSection {
    /// Fills every field from the preset (or `default_preset`) and validates.
    pub fn resolve(&mut self, default_preset: u8) -> Result<ModelParams, CliError> {
        let index = *self.preset.get_or_insert(default_preset);
        let base = preset(index)?;
        let params = ModelParams {
            mu: *self.mu.get_or_insert(base.mu),
            sigma: *self.sigma.get_or_insert(base.sigma),
            b: *self.b.get_or_insert(base.b),
            r: *self.r.get_or_insert(base.r),
            q: *self.q.get_or_insert(base.q),
            s0: *self.s0.get_or_insert(base.s0),
        };
        Ok(params.validate()?)
    }
}

/// Overlays every `Some` field of `over` onto `base`.
pub trait Overlay {
    fn overlay(&mut self, over: Self);
}

macro_rules! overlay_fields {
    ($ty:ty { $($field:ident),* }) => {
        impl Overlay for $ty {
            fn overlay(&mut self, over: Self) {
                $(if over.$field.is_some() { self.$field = over.$field; })*
            }
        }
    };
}

overlay_fields!(ModelSection { preset, mu, sigma, b, r, q, s0 });
overlay_fields!(GridSection { horizon, steps });
overlay_fields!(SimulateSection { paths, dump, figure });
overlay_fields!(ArbSection { seeds, diagnostic, diagnostic_paths });
overlay_fields!(PriceSection { kind, strike, maturity, valuation_time, spot, methods, mc_paths, mc_steps, mc_scheme });
overlay_fields!(FigureSection { index, points });
overlay_fields!(SweepSection { target, axes, spot, strike, tau, lock_theta_one });

impl Overlay for RunConfig {
    fn overlay(&mut self, over: Self) {
        if over.command.is_some() {
            self.command = over.command;
        }
        if over.seed.is_some() {
            self.seed = over.seed;
        }
        if over.out.is_some() {
            self.out = over.out;
        }
        self.model.overlay(over.model);
        self.grid.overlay(over.grid);
        self.simulate.overlay(over.simulate);
        self.arb.overlay(over.arb);
        self.price.overlay(over.price);
        self.figure.overlay(over.figure);
        self.sweep.overlay(over.sweep);
    }
}

pub fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_values() {
        let mut file: RunConfig =
            serde_json::from_str(r#"{"seed": 3, "model": {"preset": 2, "sigma": 0.4}, "grid": {"steps": 50}}"#).unwrap();
        let flags = RunConfig {
            seed: Some(9),
            model: ModelSection { r: Some(0.2), ..Default::default() },
            ..Default::default()
        };
        file.overlay(flags);
        assert_eq!(file.seed, Some(9));
        assert_eq!(file.model.sigma, Some(0.4));
        assert_eq!(file.model.r, Some(0.2));
        assert_eq!(file.grid.steps, Some(50));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"sede": 3}"#).is_err());
    }

    #[test]
    fn preset_fills_missing_fields() {
        let mut m = ModelSection { sigma: Some(0.3), ..Default::default() };
        let p = m.resolve(1).unwrap();
        assert_eq!(p.sigma, 0.3);
        assert_eq!(p.s0, 2.0);
        assert_eq!(m.preset, Some(1));
        assert_eq!(m.s0, Some(2.0));
    }

    #[test]
    fn axis_forms() {
        let mut a = AxisSpec::parse("tau:1:3:3").unwrap();
        assert_eq!(a.resolve().unwrap().values, vec![1.0, 2.0, 3.0]);
        assert_eq!(a.values, Some(vec![1.0, 2.0, 3.0]));
        let mut b = AxisSpec::parse("strike=1.5, 2").unwrap();
        assert_eq!(b.resolve().unwrap().param, AxisParam::Strike);
        assert!(AxisSpec::parse("tau:1:3").is_err());
        assert!(AxisSpec::parse("volume=1").is_err());
    }
}
