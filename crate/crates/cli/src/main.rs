mod commands;
mod grid;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use fracmarket::strategies::Horizon;
use fracmarket::Error;
use serde::Serialize;
use serde_json::json;

use crate::grid::Grid;

/// Experiments on fractional binary markets with proportional transaction costs.
#[derive(Debug, Parser)]
#[command(name = "fracmarket", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    /// Hurst parameter in (1/2, 1).
    #[arg(long = "H", global = true, default_value_t = 0.75)]
    pub hurst: f64,
    #[arg(long, global = true, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, global = true, default_value_t = 1.0)]
    pub s0: f64,
    /// Number of steps of a single market.
    #[arg(long = "N", global = true)]
    pub n: Option<usize>,
    /// `a:b:step`, `dyadic:a:b` (values, not exponents) or `n1,n2,...`.
    #[arg(long = "N-grid", global = true)]
    #[serde(serialize_with = "grid_values")]
    pub n_grid: Option<Grid>,
    #[arg(long, global = true, default_value_t = 0.25)]
    pub gamma: f64,
    #[arg(long, global = true)]
    pub lambda: Option<f64>,
    #[arg(long = "n-max", global = true, default_value_t = 500)]
    pub n_max: usize,
    #[arg(long = "quad-tol", global = true, default_value_t = 1e-10)]
    pub quad_tol: f64,
    #[arg(long = "mc-samples", global = true, default_value_t = 1_000_000)]
    pub mc_samples: u64,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; defaults to all cores (or RAYON_NUM_THREADS).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
}

fn grid_values<S: serde::Serializer>(g: &Option<Grid>, s: S) -> Result<S::Ok, S::Error> {
    g.as_ref().map(|g| &g.0).serialize(s)
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Coefficient table up to --n-max with its bound check.
    Coeffs,
    /// Critical-cost bounds over --N-grid (default dyadic:64:1024).
    Critical {
        /// Holding horizon of the γ-strategy: lemma, maximal or a step count.
        #[arg(long, default_value = "maximal")]
        #[serde(serialize_with = "display")]
        horizon: Horizon,
    },
    /// Arbitrage-point census at the levels in --N-grid (default 1:20:1).
    Census {
        /// Levels with at most this many free signs are enumerated; Monte Carlo above.
        #[arg(long = "exhaustive-max", default_value_t = 20)]
        exhaustive_max: usize,
    },
    /// First-kind asymptotic arbitrage over --N-grid (default dyadic:64:16384).
    Aa1 {
        /// Cost exponent, λ_N = N^-p with p > H.
        #[arg(long, default_value_t = 1.25)]
        p: f64,
    },
    /// Exhaustive certificate for one strategy at --N (default 64) and --lambda.
    Verify {
        #[arg(long, value_enum, default_value = "gamma")]
        #[serde(serialize_with = "display")]
        strategy: StrategyKind,
        /// Shorting level of the one-step strategy; defaults to n_H.
        #[arg(long)]
        n0: Option<usize>,
        /// Holding horizon of the γ-strategy: lemma, maximal or a step count.
        #[arg(long, default_value = "maximal")]
        #[serde(serialize_with = "display")]
        horizon: Horizon,
    },
    /// Normalized variance of the driving sum over --N-grid (default dyadic:512:8192).
    Variance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum StrategyKind {
    /// Short one unit at the all-down node of level n0 - 1, close one step later.
    AllDown,
    /// Short one unit at the all-down node of level ⌊γN⌋ and hold for --horizon steps.
    Gamma,
}

impl std::fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StrategyKind::AllDown => "all-down",
            StrategyKind::Gamma => "gamma",
        })
    }
}

fn display<T: std::fmt::Display, S: serde::Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

/// Result of a subcommand: JSON summary and whether a checked claim failed.
pub struct Outcome {
    pub results: serde_json::Value,
    pub violation: bool,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) | Error::Csv(_) | Error::Json(_) | Error::Quadrature { .. } => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.common.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let start = Instant::now();
    let outcome = std::fs::create_dir_all(&cli.common.out)
        .map_err(Error::from)
        .and_then(|_| commands::run(&cli.command, &cli.common));
    let outcome = match outcome {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    let constants = fracmarket::kernels::HurstParams::new(cli.common.hurst, cli.common.sigma)
        .map(|p| json!(p.constants()))
        .unwrap_or(serde_json::Value::Null);
    let record = json!({
        "command": cli.command,
        "config": cli.common,
        "tool_version": env!("CARGO_PKG_VERSION"),
        "wall_time_s": start.elapsed().as_secs_f64(),
        "derived_constants": constants,
        "violation": outcome.violation,
        "results": outcome.results,
    });
    let path = cli.common.out.join("run.json");
    let written = serde_json::to_string_pretty(&record)
        .map_err(Error::from)
        .and_then(|s| std::fs::write(&path, s + "\n").map_err(Error::from));
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    if outcome.violation {
        eprintln!("violation found; see {}", path.display());
        ExitCode::from(3)
    } else {
        ExitCode::SUCCESS
    }
}
