use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rgbm_core::bounds::SweepTarget;
use rgbm_core::OptionKind;

mod commands;
mod config;
mod error;

use config::{
    ArbSection, Overlay, AxisSpec, FigureSection, GridSection, Method, ModelSection, PriceSection, RunConfig, SchemeName,
    SimulateSection, SweepSection,
};
use error::CliError;

/// Reflected GBM: simulation, boundary arbitrage, pricing audits and figure data.
#[derive(Debug, Parser)]
#[command(name = "rgbm", version)]
struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default: out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads. Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Start from the parameter set of figure 1, 2, 3 or 4.
    #[arg(long, global = true)]
    preset: Option<u8>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    mu: Option<f64>,
    #[arg(long, global = true)]
    sigma: Option<f64>,
    /// Reflecting boundary.
    #[arg(long = "b", global = true)]
    b: Option<f64>,
    #[arg(long = "r", global = true)]
    r: Option<f64>,
    /// Deferment rate.
    #[arg(long = "q", global = true)]
    q: Option<f64>,
    #[arg(long, global = true)]
    s0: Option<f64>,
}

#[derive(Debug, Args)]
struct GridArgs {
    #[arg(long, global = true)]
    horizon: Option<f64>,
    #[arg(long, global = true)]
    steps: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate reflected paths and summarise boundary visits.
    Simulate {
        /// Number of consecutive seeds.
        #[arg(long)]
        paths: Option<usize>,
        /// Write `path_<seed>.csv` for this many of them (default 10).
        #[arg(long)]
        dump: Option<usize>,
        /// Only 1 is a simulation figure.
        #[arg(long)]
        figure: Option<u8>,
    },
    /// Run the boundary-harvesting strategy over many seeds.
    Arb {
        #[arg(long)]
        seeds: Option<usize>,
        #[arg(long, num_args = 0..=1, default_missing_value = "true")]
        diagnostic: Option<bool>,
        #[arg(long)]
        diagnostic_paths: Option<usize>,
    },
    /// Price one contract with the requested methods and audit the bound.
    Price {
        #[arg(long)]
        kind: Option<OptionKind>,
        #[arg(long)]
        strike: Option<f64>,
        #[arg(long)]
        maturity: Option<f64>,
        #[arg(long)]
        valuation_time: Option<f64>,
        #[arg(long)]
        spot: Option<f64>,
        #[arg(long, value_enum, value_delimiter = ',')]
        methods: Option<Vec<Method>>,
        #[arg(long)]
        mc_paths: Option<usize>,
        #[arg(long)]
        mc_steps: Option<usize>,
        #[arg(long, value_enum)]
        mc_scheme: Option<SchemeName>,
    },
    /// Emit the data behind figure 1, 2, 3 or 4 as CSV.
    Figure {
        index: Option<u8>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Evaluate a bound over a parameter grid.
    Sweep {
        #[arg(long)]
        target: Option<SweepTarget>,
        /// `name=v1,v2,...` or `name:lo:hi:n`; repeat for more axes.
        #[arg(long = "axis")]
        axes: Vec<String>,
        #[arg(long)]
        spot: Option<f64>,
        #[arg(long)]
        strike: Option<f64>,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long, num_args = 0..=1, default_missing_value = "true")]
        lock_theta_one: Option<bool>,
    },
}

impl Cli {
    fn into_overrides(self) -> Result<(RunConfig, Option<PathBuf>, Option<usize>), CliError> {
        let mut cfg = RunConfig {
            seed: self.seed,
            out: self.out,
            model: ModelSection {
                preset: self.model.preset,
                mu: self.model.mu,
                sigma: self.model.sigma,
                b: self.model.b,
                r: self.model.r,
                q: self.model.q,
                s0: self.model.s0,
            },
            grid: GridSection { horizon: self.grid.horizon, steps: self.grid.steps },
            ..Default::default()
        };
        let name = match self.command {
            Command::Simulate { paths, dump, figure } => {
                cfg.simulate = SimulateSection { paths, dump, figure };
                "simulate"
            }
            Command::Arb { seeds, diagnostic, diagnostic_paths } => {
                cfg.arb = ArbSection { seeds, diagnostic, diagnostic_paths };
                "arb"
            }
            Command::Price { kind, strike, maturity, valuation_time, spot, methods, mc_paths, mc_steps, mc_scheme } => {
                cfg.price = PriceSection {
                    kind,
                    strike,
                    maturity,
                    valuation_time,
                    spot,
                    methods,
                    mc_paths,
                    mc_steps,
                    mc_scheme,
                };
                "price"
            }
            Command::Figure { index, points } => {
                cfg.figure = FigureSection { index, points };
                "figure"
            }
            Command::Sweep { target, axes, spot, strike, tau, lock_theta_one } => {
                let axes = if axes.is_empty() {
                    None
                } else {
                    Some(axes.iter().map(|a| AxisSpec::parse(a)).collect::<Result<Vec<_>, _>>()?)
                };
                cfg.sweep = SweepSection { target, axes, spot, strike, tau, lock_theta_one };
                "sweep"
            }
        };
        cfg.command = Some(name.to_string());
        Ok((cfg, self.config, self.threads))
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (flags, config_path, threads) = cli.into_overrides()?;
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    }
    let mut cfg = match &config_path {
        Some(path) => config::load(path)?,
        None => RunConfig::default(),
    };
    cfg.overlay(flags);
    commands::dispatch(cfg)
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("rgbm: {e}");
        std::process::exit(e.exit_code());
    }
}
