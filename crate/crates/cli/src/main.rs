//! `floquet-engine`: limit cycles, direct simulation, period sweeps and the
//! validation battery from the command line.
//!
//! Exit codes: 0 ok, 1 config error, 2 unstable (formal cycle still
//! written), 3 divergence during propagation, 4 validation failure,
//! 5 numerical or I/O failure.

// `!(x > 0.0)` is used deliberately so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod output;
mod simulate;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use floquet_engine::protocol::{load_protocol, load_protocol_file, LoadedProtocol};
use floquet_engine::Error;
use serde::Serialize;

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_UNSTABLE: u8 = 2;
pub const EXIT_DIVERGENCE: u8 = 3;
pub const EXIT_VALIDATION: u8 = 4;
pub const EXIT_RUNTIME: u8 = 5;

pub const THREADS_ENV: &str = "FLOQUET_ENGINE_THREADS";

#[derive(Debug, Parser)]
#[command(name = "floquet-engine", version, about = "Limit cycles and thermodynamics of driven, damped bosonic modes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample the Floquet limit cycle over one period and write CSV plus a JSON summary.
    LimitCycle(LimitCycleArgs),
    /// Propagate the moments directly with cumulative work and heat.
    Simulate(SimulateArgs),
    /// Efficiency, power and stability for a list of periods (JSON array).
    Sweep(SweepArgs),
    /// Run the built-in acceptance battery.
    Validate(ValidateArgs),
}

/// Where the protocol comes from.
#[derive(Debug, Clone, Args, Serialize)]
pub struct Source {
    /// JSON protocol config.
    #[arg(long, value_name = "PATH", conflicts_with = "builtin", required_unless_present = "builtin")]
    pub config: Option<PathBuf>,
    /// Builtin protocol with default parameters: carnot-fig2, otto or parametric.
    #[arg(long, value_name = "NAME")]
    pub builtin: Option<String>,
    /// Override the cycle period; stroke durations scale proportionally.
    #[arg(long, value_name = "X")]
    pub period: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LimitCycleArgs {
    #[command(flatten)]
    pub source: Source,
    /// Rows per period, at t = kT/N for k = 0..N-1.
    #[arg(long, value_name = "N", default_value_t = 200)]
    pub samples: usize,
    /// Output CSV; the summary and manifest are written next to it.
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    /// ODE tolerance.
    #[arg(long, value_name = "X", default_value_t = output::DEFAULT_ODE_TOL)]
    pub tol: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub source: Source,
    /// Number of periods to propagate.
    #[arg(long, value_name = "K")]
    pub periods: usize,
    /// Initial moments `n,m_re,m_im`; the vacuum by default.
    #[arg(long, value_name = "n,m_re,m_im", default_value = "0,0,0")]
    pub initial: String,
    /// Rows per period.
    #[arg(long, value_name = "N", default_value_t = 200)]
    pub samples: usize,
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    #[arg(long, value_name = "X", default_value_t = output::DEFAULT_ODE_TOL)]
    pub tol: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepArgs {
    #[command(flatten)]
    pub source: Source,
    /// Periods as `a,b,c` or an inclusive range `start:stop:step`.
    #[arg(long, value_name = "LIST|RANGE", allow_hyphen_values = true)]
    pub periods: String,
    /// Output JSON array.
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    #[arg(long, value_name = "X", default_value_t = output::DEFAULT_ODE_TOL)]
    pub tol: f64,
    /// Worker threads; falls back to FLOQUET_ENGINE_THREADS, then to the core count.
    #[arg(long, value_name = "N")]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ValidateArgs {
    /// Fock cutoff of the moment oracle.
    #[arg(long, value_name = "N", default_value_t = floquet_engine::dynamics::DEFAULT_DYNAMICS_CUTOFF)]
    pub nmax: usize,
    #[arg(long, value_name = "N")]
    pub threads: Option<usize>,
    /// Optional JSON report.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

/// A command that stopped early, with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_RUNTIME,
            message: message.into(),
        }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Failure::runtime(format!("{}: {e}", path.display()))
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config { .. } | Error::InvalidProtocol(_) | Error::InvalidParameter { .. } => EXIT_CONFIG,
            _ => EXIT_RUNTIME,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl Source {
    pub fn load(&self) -> Result<LoadedProtocol, Failure> {
        let loaded = match (&self.config, &self.builtin) {
            (Some(path), _) => load_protocol_file(path)?,
            (None, Some(name)) => load_protocol(&serde_json::json!({ "builtin": name }).to_string())?,
            (None, None) => return Err(Failure::config("give --config PATH or --builtin NAME")),
        };
        match self.period {
            Some(t) => Ok(loaded.with_period(t)?),
            None => Ok(loaded),
        }
    }
}

/// `--threads`, then the environment variable, then 0 (rayon's default).
pub fn resolve_threads(flag: Option<usize>) -> Result<usize, Failure> {
    if let Some(n) = flag {
        return Ok(n);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse()
            .map_err(|_| Failure::config(format!("{THREADS_ENV} must be a non-negative integer, got `{v}`"))),
        _ => Ok(0),
    }
}

pub fn check_tol(tol: f64) -> Result<(), Failure> {
    if tol.is_finite() && tol > 0.0 && tol < 1.0 {
        Ok(())
    } else {
        Err(Failure::config(format!("--tol must lie in (0, 1), got {tol}")))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Usage errors are config errors; help and version are not errors.
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK });
        }
    };
    let result = match &cli.command {
        Command::LimitCycle(a) => commands::limit_cycle(a),
        Command::Simulate(a) => simulate::run(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Validate(a) => commands::validate(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
