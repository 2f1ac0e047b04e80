//! The five subcommands. Each resolves its part of the configuration, writes
//! its outputs plus `config.json` into the output directory and prints a
//! short summary.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use rgbm_core::arbitrage::{reflection_arbitrage_on_path, structure_condition_diagnostic};
use rgbm_core::bounds::{
    check_bound, check_call_upper, check_nneg_lower, check_put_lower, nneg_asymptote, violation_sweep, BoundVerdict,
    CellOutcome, SweepBase, SweepResult, SweepTarget,
};
use rgbm_core::output::{write_path_csv, write_sweep_csv, write_table, write_trajectory_csv};
use rgbm_core::pricing::{
    baseline_price, black76_put, bs_call, bs_put, mc_price_with, rgbm_call, rgbm_nneg, rgbm_price, rgbm_put,
    McScheme, PricingMethod,
};
use rgbm_core::sim::{first_passage_time, simulate_rgbm_path};
use rgbm_core::stats::mean_and_std_error;
use rgbm_core::{ModelParams, OptionKind, OptionSpec, PricingIntermediates, TimeGrid};
use serde::Serialize;
use serde_json::json;

use crate::config::{AxisSpec, GridSection, Method, RunConfig, SchemeName};
use crate::error::CliError;

const DEFAULT_HORIZON: f64 = 10.0;
const DEFAULT_STEPS: usize = 10_000;
const DEFAULT_DUMP: usize = 10;
const DEFAULT_ARB_SEEDS: usize = 1_000;
const DEFAULT_DIAGNOSTIC_PATHS: usize = 100;
const DEFAULT_MC_PATHS: usize = 100_000;
const DEFAULT_MC_STEPS: usize = 1_000;

pub fn dispatch(mut cfg: RunConfig) -> Result<(), CliError> {
    let out = cfg.out.get_or_insert_with(|| PathBuf::from("out")).clone();
    let seed = *cfg.seed.get_or_insert(0);
    let command = cfg.command.clone().unwrap_or_default();
    match command.as_str() {
        "simulate" => simulate(&mut cfg, &out, seed)?,
        "arb" => arb(&mut cfg, &out, seed)?,
        "price" => price(&mut cfg, &out)?,
        "figure" => figure(&mut cfg, &out, seed)?,
        "sweep" => sweep(&mut cfg, &out)?,
        other => return Err(CliError::Usage(format!("unknown command '{other}'"))),
    }
    write_json(&out.join("config.json"), &cfg)
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut w = create(path)?;
    let text = serde_json::to_string_pretty(value).expect("outputs serialise");
    writeln!(w, "{text}").and_then(|_| w.flush()).map_err(|e| CliError::io(path, e))
}

fn with_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<(), CliError> {
    let mut w = create(path)?;
    f(&mut w).and_then(|_| w.flush()).map_err(|e| CliError::io(path, e))
}

fn resolve_grid(grid: &mut GridSection) -> Result<TimeGrid, CliError> {
    let horizon = *grid.horizon.get_or_insert(DEFAULT_HORIZON);
    let steps = *grid.steps.get_or_insert(DEFAULT_STEPS);
    Ok(TimeGrid::new(0.0, horizon, steps)?)
}

fn positive(name: &str, n: usize) -> Result<usize, CliError> {
    if n == 0 {
        return Err(CliError::Usage(format!("{name} must be positive")));
    }
    Ok(n)
}

fn simulate(cfg: &mut RunConfig, out: &Path, seed: u64) -> Result<(), CliError> {
    let figure = cfg.simulate.figure;
    if let Some(f) = figure {
        if f != 1 {
            return Err(CliError::Usage(format!("simulate only reproduces figure 1; use `figure {f}`")));
        }
    }
    let params = cfg.model.resolve(1)?;
    let grid = resolve_grid(&mut cfg.grid)?;
    let n = positive("paths", *cfg.simulate.paths.get_or_insert(1))?;
    let dump = (*cfg.simulate.dump.get_or_insert(DEFAULT_DUMP)).min(n);
    ensure_dir(out)?;

    struct PathStats {
        terminal_l: f64,
        terminal_s: f64,
        reflections: f64,
        passage: Option<f64>,
    }
    let stats: Vec<PathStats> = (0..n as u64)
        .into_par_iter()
        .map(|k| {
            let path = simulate_rgbm_path(&params, &grid, seed + k).expect("validated inputs");
            PathStats {
                terminal_l: path.terminal_l(),
                terminal_s: path.terminal_s(),
                reflections: path.reflection_count() as f64,
                passage: first_passage_time(&path, params.b),
            }
        })
        .collect();

    for k in 0..dump as u64 {
        let path = simulate_rgbm_path(&params, &grid, seed + k)?;
        with_file(&out.join(format!("path_{}.csv", seed + k)), |w| write_path_csv(w, &path))?;
    }
    if figure == Some(1) {
        write_figure1(&params, &grid, seed, out)?;
    }

    let ls: Vec<f64> = stats.iter().map(|s| s.terminal_l).collect();
    let ss: Vec<f64> = stats.iter().map(|s| s.terminal_s).collect();
    let refl: Vec<f64> = stats.iter().map(|s| s.reflections).collect();
    let hits = stats.iter().filter(|s| s.terminal_l > 0.0).count();
    let passages: Vec<f64> = stats.iter().filter_map(|s| s.passage).collect();
    let (mean_l, se_l) = moments(&ls);
    let summary = json!({
        "paths": n,
        "first_seed": seed,
        "last_seed": seed + n as u64 - 1,
        "dt": grid.dt(),
        "hit_fraction": hits as f64 / n as f64,
        "mean_terminal_l": mean_l,
        "std_error_terminal_l": se_l,
        "mean_terminal_s": moments(&ss).0,
        "mean_reflection_steps": moments(&refl).0,
        "mean_first_passage_time": if passages.is_empty() { None } else { Some(moments(&passages).0) },
    });
    write_json(&out.join("summary.json"), &summary)?;
    println!("simulated {n} path(s); hit fraction {:.4}, mean L_T {mean_l:.6}", hits as f64 / n as f64);
    Ok(())
}

/// Mean and standard error; the error is zero for a single sample.
fn moments(xs: &[f64]) -> (f64, f64) {
    if xs.len() < 2 {
        return (xs.first().copied().unwrap_or(0.0), 0.0);
    }
    mean_and_std_error(xs)
}

fn write_figure1(params: &ModelParams, grid: &TimeGrid, seed: u64, out: &Path) -> Result<(), CliError> {
    let path = simulate_rgbm_path(params, grid, seed)?;
    let traj = reflection_arbitrage_on_path(&path, params);
    with_file(&out.join("figure1.csv"), |w| {
        write_table(
            w,
            &["time", "s", "l", "position"],
            (0..path.s.len()).map(|i| vec![path.times[i], path.s[i], path.l[i], traj.position[i]]),
        )
    })
}

#[derive(Serialize)]
struct ArbPath {
    seed: u64,
    terminal_value: f64,
    terminal_l: f64,
    reflection_steps: usize,
    non_decreasing: bool,
    zero_before_first_reflection: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    value_equals_l: Option<bool>,
}

fn arb(cfg: &mut RunConfig, out: &Path, seed: u64) -> Result<(), CliError> {
    let params = cfg.model.resolve(1)?;
    let grid = resolve_grid(&mut cfg.grid)?;
    let n = positive("seeds", *cfg.arb.seeds.get_or_insert(DEFAULT_ARB_SEEDS))?;
    let with_diagnostic = *cfg.arb.diagnostic.get_or_insert(false);
    ensure_dir(out)?;

    let rows: Vec<ArbPath> = (0..n as u64)
        .into_par_iter()
        .map(|k| {
            let path = simulate_rgbm_path(&params, &grid, seed + k).expect("validated inputs");
            let traj = reflection_arbitrage_on_path(&path, &params);
            let first = path.reflected.iter().position(|&f| f).unwrap_or(path.s.len());
            ArbPath {
                seed: seed + k,
                terminal_value: traj.terminal_value(),
                terminal_l: path.terminal_l(),
                reflection_steps: path.reflection_count(),
                non_decreasing: traj.is_non_decreasing(),
                zero_before_first_reflection: traj.value[..first].iter().all(|&v| v == 0.0),
                value_equals_l: (params.r == 0.0).then(|| traj.value == path.l),
            }
        })
        .collect();

    let first_path = simulate_rgbm_path(&params, &grid, seed)?;
    let traj = reflection_arbitrage_on_path(&first_path, &params);
    with_file(&out.join(format!("trajectory_{seed}.csv")), |w| write_trajectory_csv(w, &traj))?;

    let positive_count = rows.iter().filter(|r| r.terminal_value > 0.0).count();
    let fold = |f: fn(f64, f64) -> f64, init: f64| rows.iter().map(|r| r.terminal_value).fold(init, f);
    let equals_l = if params.r == 0.0 {
        if rows.iter().all(|r| r.value_equals_l == Some(true)) { "pass" } else { "fail" }
    } else {
        "not_applicable"
    };
    let report = json!({
        "seeds": n,
        "first_seed": seed,
        "r": params.r,
        "dt": grid.dt(),
        "positive_count": positive_count,
        "positive_fraction": positive_count as f64 / n as f64,
        "min_terminal_value": fold(f64::min, f64::INFINITY),
        "max_terminal_value": fold(f64::max, f64::NEG_INFINITY),
        "all_non_decreasing": rows.iter().all(|r| r.non_decreasing),
        "all_zero_before_first_reflection": rows.iter().all(|r| r.zero_before_first_reflection),
        "value_equals_l": equals_l,
        "paths": rows,
    });
    write_json(&out.join("arb.json"), &report)?;

    if with_diagnostic {
        let paths = positive("diagnostic_paths", *cfg.arb.diagnostic_paths.get_or_insert(DEFAULT_DIAGNOSTIC_PATHS))?;
        let d = structure_condition_diagnostic(&params, &grid, paths, seed)?;
        let mut value = serde_json::to_value(d).expect("report serialises");
        value["qv_to_drift_ratio"] = json!(d.qv_to_drift_ratio());
        write_json(&out.join("diagnostic.json"), &value)?;
        println!(
            "diagnostic: A^ reflection mass {:.6}, <M^> reflection mass {:.6}",
            d.a_hat_reflection_mass, d.qv_reflection_mass
        );
    }
    println!(
        "{n} seeds: positive fraction {:.4}, non-decreasing on all: {}, V = L check: {equals_l}",
        positive_count as f64 / n as f64,
        rows.iter().all(|r| r.non_decreasing)
    );
    Ok(())
}

#[derive(Serialize)]
struct QuoteOut {
    method: PricingMethod,
    value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    std_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    intermediates: Option<PricingIntermediates>,
    bound_status: BoundVerdict,
}

fn price(cfg: &mut RunConfig, out: &Path) -> Result<(), CliError> {
    let p = &mut cfg.price;
    let kind = *p.kind.get_or_insert(OptionKind::Call);
    let (preset, strike, maturity) = match kind {
        OptionKind::Call => (2, 2.0, 10.0),
        OptionKind::Put => (3, 2.0, 10.0),
        OptionKind::Nneg => (4, 0.9, 20.0),
    };
    let params = cfg.model.resolve(preset)?;
    let spec = OptionSpec::new(
        kind,
        *p.strike.get_or_insert(strike),
        *p.maturity.get_or_insert(maturity),
        *p.valuation_time.get_or_insert(0.0),
    );
    spec.validate()?;
    let s = *p.spot.get_or_insert(params.s0);
    let methods = p.methods.get_or_insert_with(|| vec![Method::Rgbm, Method::Baseline]).clone();
    if methods.is_empty() {
        return Err(CliError::Usage("no pricing method requested".into()));
    }

    let mut quotes = Vec::new();
    for m in &methods {
        let (value, std_error, intermediates, method) = match m {
            Method::Rgbm => {
                let q = rgbm_price(&spec, s, &params)?;
                (q.value, None, q.intermediates, q.method)
            }
            Method::Baseline => {
                let q = baseline_price(&spec, s, &params)?;
                (q.value, None, q.intermediates, q.method)
            }
            Method::Mc => {
                let n_paths = *p.mc_paths.get_or_insert(DEFAULT_MC_PATHS);
                let scheme = match *p.mc_scheme.get_or_insert(SchemeName::Euler) {
                    SchemeName::Euler => {
                        let steps = *p.mc_steps.get_or_insert(DEFAULT_MC_STEPS);
                        McScheme::Euler { grid: TimeGrid::new(spec.valuation_time, spec.maturity, steps)? }
                    }
                    SchemeName::Exact => McScheme::ExactTerminal,
                };
                let est = mc_price_with(&spec, s, &params, n_paths, scheme, cfg.seed.unwrap_or(0))?;
                (est.mean, Some(est.std_error), None, PricingMethod::MonteCarlo)
            }
        };
        let bound_status = check_bound(&spec, value, s, &params);
        quotes.push(QuoteOut { method, value, std_error, intermediates, bound_status });
    }

    let mut report = json!({
        "contract": spec,
        "spot": s,
        "params": params,
        "quotes": quotes,
    });
    if kind == OptionKind::Nneg && methods.contains(&Method::Rgbm) {
        let rgbm = rgbm_nneg(&spec, s, &params)?.value;
        let b76 = black76_put(&spec, s, params.r, params.q, params.sigma)?.value;
        let bound = check_nneg_lower(rgbm, s, spec.strike, params.r, params.q, spec.tau()).bound_value;
        report["ratios"] = json!({ "rgbm_to_lower_bound": rgbm / bound, "rgbm_to_black76": rgbm / b76 });
        println!("NNEG ratios: {:.4} of the lower bound, {:.4} of Black-76", rgbm / bound, rgbm / b76);
    }
    ensure_dir(out)?;
    write_json(&out.join("price.json"), &report)?;
    for q in &quotes {
        let flag = if q.bound_status.violated { "VIOLATES" } else { "respects" };
        let se = q.std_error.map(|e| format!(" +- {e:.6}")).unwrap_or_default();
        println!(
            "{:<14} {:.10}{se}  {flag} bound {:.10} (margin {:+.3e})",
            q.method.to_string(),
            q.value,
            q.bound_status.bound_value,
            q.bound_status.margin
        );
    }
    Ok(())
}

fn figure(cfg: &mut RunConfig, out: &Path, seed: u64) -> Result<(), CliError> {
    let index = cfg.figure.index.ok_or_else(|| CliError::Usage("figure needs an index: 1, 2, 3 or 4".into()))?;
    if !(1..=4).contains(&index) {
        return Err(CliError::Usage(format!("figure index must be 1, 2, 3 or 4, got {index}")));
    }
    let params = cfg.model.resolve(index)?;
    ensure_dir(out)?;
    let path = out.join(format!("figure{index}.csv"));
    match index {
        1 => {
            let grid = resolve_grid(&mut cfg.grid)?;
            write_figure1(&params, &grid, seed, out)?;
        }
        2 | 3 => {
            let n = positive("points", *cfg.figure.points.get_or_insert(500))?;
            let (kind, k, tau) = (if index == 2 { OptionKind::Call } else { OptionKind::Put }, 2.0, 10.0);
            let spec = OptionSpec::with_tau(kind, k, tau);
            let b = params.b;
            let mut rows = Vec::with_capacity(n);
            for i in 0..n {
                let s = if n == 1 { b } else { b + 4.0 * b * i as f64 / (n - 1) as f64 };
                let row = if kind == OptionKind::Call {
                    let rgbm = rgbm_call(&spec, s, &params)?.value;
                    let bs = bs_call(&spec, s, params.r, params.sigma)?.value;
                    vec![s, rgbm, bs, check_call_upper(rgbm, s).bound_value]
                } else {
                    let rgbm = rgbm_put(&spec, s, &params)?.value;
                    let bs = bs_put(&spec, s, params.r, params.sigma)?.value;
                    vec![s, rgbm, bs, check_put_lower(rgbm, s, k, params.r, tau).bound_value]
                };
                rows.push(row);
            }
            with_file(&path, |w| write_table(w, &["s", "rgbm", "bs", "bound"], rows))?;
        }
        _ => {
            let n = positive("points", *cfg.figure.points.get_or_insert(400))?;
            let (s, k) = (params.s0, 0.9);
            let limit = nneg_asymptote(k, params.b, params.theta())?;
            let mut rows = Vec::with_capacity(n);
            for i in 1..=n {
                let tau = 40.0 * i as f64 / n as f64;
                let spec = OptionSpec::with_tau(OptionKind::Nneg, k, tau);
                let rgbm = rgbm_nneg(&spec, s, &params)?.value;
                let b76 = black76_put(&spec, s, params.r, params.q, params.sigma)?.value;
                let bound = check_nneg_lower(rgbm, s, k, params.r, params.q, tau).bound_value;
                rows.push(vec![tau, rgbm, b76, bound, limit]);
            }
            with_file(&path, |w| write_table(w, &["T", "rgbm", "black76", "bound", "asymptote"], rows))?;
        }
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn sweep(cfg: &mut RunConfig, out: &Path) -> Result<(), CliError> {
    let sw = &mut cfg.sweep;
    let target = sw.target.ok_or_else(|| CliError::Usage("sweep needs --target prop33|prop34|prop35".into()))?;
    let (preset, strike, tau, lock, default_axes) = match target {
        SweepTarget::Prop33 => (2, 2.0, 10.0, true, vec!["strike:1:3:9", "rate:0.025:0.2:8"]),
        SweepTarget::Prop34 => (3, 2.0, 10.0, true, vec!["strike:1:5:17", "rate:0.01:0.1:10"]),
        SweepTarget::Prop35 => (4, 0.9, 20.0, false, vec!["tau:0.5:40:80"]),
    };
    let params = cfg.model.resolve(preset)?;
    let specs = sw.axes.get_or_insert_with(|| {
        default_axes.iter().map(|a| AxisSpec::parse(a).expect("default axes parse")).collect()
    });
    if specs.is_empty() {
        return Err(CliError::Usage("sweep needs at least one axis".into()));
    }
    let axes = specs.iter_mut().map(AxisSpec::resolve).collect::<Result<Vec<_>, _>>()?;
    // Near-boundary targets default to s = b, the NNEG one to the preset spot.
    let spot_default = if target == SweepTarget::Prop35 { params.s0 } else { params.b };
    let base = SweepBase {
        params,
        spot: *sw.spot.get_or_insert(spot_default),
        strike: *sw.strike.get_or_insert(strike),
        tau: *sw.tau.get_or_insert(tau),
        lock_theta_one: *sw.lock_theta_one.get_or_insert(lock),
    };
    let result = violation_sweep(target, &axes, &base)?;
    ensure_dir(out)?;
    with_file(&out.join("sweep.csv"), |w| write_sweep_csv(w, &result))?;
    write_json(&out.join("sweep.json"), &sweep_summary(&result))?;
    println!(
        "{} cells: {} violated, {} undefined{}",
        result.cells.len(),
        result.violated_count,
        result.undefined_count,
        result.crossing_tau.map(|t| format!(", violation beyond T' = {t:.4}")).unwrap_or_default()
    );
    Ok(())
}

/// Counts, the first violating cell and, per axis, the range spanned by the
/// violating cells.
fn sweep_summary(result: &SweepResult) -> serde_json::Value {
    let names: Vec<&str> = result.axes.iter().map(|a| a.param.name()).collect();
    let named = |coords: &[f64]| -> serde_json::Map<String, serde_json::Value> {
        names.iter().zip(coords).map(|(n, v)| (n.to_string(), json!(v))).collect()
    };
    let violated: Vec<&[f64]> = result.cells.iter().filter(|c| c.outcome.is_violated()).map(|c| c.coords.as_slice()).collect();
    let region: serde_json::Map<String, serde_json::Value> = names
        .iter()
        .enumerate()
        .filter(|_| !violated.is_empty())
        .map(|(i, n)| {
            let lo = violated.iter().map(|c| c[i]).fold(f64::INFINITY, f64::min);
            let hi = violated.iter().map(|c| c[i]).fold(f64::NEG_INFINITY, f64::max);
            (n.to_string(), json!([lo, hi]))
        })
        .collect();
    let mut codes: Vec<&str> = result
        .cells
        .iter()
        .filter_map(|c| match &c.outcome {
            CellOutcome::Undefined { code } => Some(code.as_str()),
            CellOutcome::Priced { .. } => None,
        })
        .collect();
    codes.sort_unstable();
    codes.dedup();
    json!({
        "target": result.target,
        "axes": names,
        "shape": result.shape(),
        "cells": result.cells.len(),
        "violated_count": result.violated_count,
        "undefined_count": result.undefined_count,
        "undefined_codes": codes,
        "first_violation": result.first_violation.as_deref().map(named),
        "violation_region": if violated.is_empty() { None } else { Some(region) },
        "crossing_tau": result.crossing_tau,
    })
}
