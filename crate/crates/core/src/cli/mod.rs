//! Command-line front end: `solve`, `validate` and `scaling`.
//!
//! Exit codes: 0 success, 2 budget / nonconvergence / stall (or a failed
//! validation property), 3 divergence, 4 configuration error.

pub mod problem_file;
mod run;
mod scaling;
mod validate;

pub use run::{execute, load_problem, trace_csv, Outcome, TraceRow};
pub use scaling::{fit_line, run_grid, scaling_fit, table_csv, LineFit, ScalingRow};
pub use validate::{validate_instance, Check};

use crate::error::{Error, Result};
use crate::pde_general::GeneralSolverConfig;
use crate::pde_strong::{KappaSchedule, StrongSolverConfig};
use crate::baselines::BaselineConfig;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::ffi::OsString;
use std::path::PathBuf;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 2;
pub const EXIT_DIVERGED: i32 = 3;
pub const EXIT_CONFIG: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "mi-splitkit", version, about = "Extrapolation solvers for monotone inclusions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one problem and write its trace and summary.
    Solve(SolveArgs),
    /// Sample-check monotonicity, resolvent identities and gradients.
    Validate(ValidateArgs),
    /// Solve over a grid of tolerances and fit the growth of the work.
    Scaling(ScalingArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algo {
    /// Perturbation outer loop for merely monotone problems.
    Pde,
    /// Extrapolation with line search for strongly monotone problems.
    PdeStrong,
    /// Fixed-step forward-backward splitting.
    Fbs,
    /// Fixed-step forward-reflected-backward splitting.
    Frbs,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::Pde => "pde",
            Algo::PdeStrong => "pde-strong",
            Algo::Fbs => "fbs",
            Algo::Frbs => "frbs",
        }
    }
}

/// Solver selection and parameter overrides shared by `solve` and `scaling`.
#[derive(Clone, Debug, Args, Serialize)]
pub struct SolverArgs {
    /// `builtin:<name>` or a path to a JSON problem file.
    #[arg(long)]
    pub problem: String,
    #[arg(long, value_enum, default_value = "pde")]
    pub algo: Algo,
    #[arg(long, default_value_t = 1e-6)]
    pub eps: f64,
    #[arg(long)]
    pub gamma0: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long)]
    pub xi: Option<f64>,
    /// Constant κ; the default is the largest admissible ξ/(1+ξ).
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Overrides the problem's strong monotonicity modulus.
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub rho0: Option<f64>,
    #[arg(long)]
    pub tau0: Option<f64>,
    #[arg(long)]
    pub zeta: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Step size for `fbs` / `frbs` (required there).
    #[arg(long)]
    pub step: Option<f64>,
    /// Seed for random builtin families whose name carries no `_s<seed>`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Iteration cap (outer iterations for `pde`).
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub max_f_evals: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Trace CSV output path.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Summary JSON output path; printed to stdout when omitted.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub problem: String,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Random pairs per sampled property.
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
}

#[derive(Debug, Args)]
pub struct ScalingArgs {
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Descending tolerances, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub eps_grid: Vec<f64>,
    /// Worker threads (default: one per grid point, capped by the CPU count).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Table CSV output path; printed to stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Fit summary JSON output path.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

impl SolverArgs {
    fn kappa(&self) -> KappaSchedule {
        self.kappa.map_or(KappaSchedule::Maximal, KappaSchedule::Constant)
    }

    pub fn strong_config(&self, mu: f64) -> Result<StrongSolverConfig> {
        let mut c = StrongSolverConfig::new(self.eps, mu);
        c.gamma0 = self.gamma0.unwrap_or(c.gamma0);
        c.delta = self.delta.unwrap_or(c.delta);
        c.nu = self.nu.unwrap_or(c.nu);
        c.xi = self.xi.unwrap_or(c.xi);
        c.kappa = self.kappa();
        c.max_iters = self.max_iters.unwrap_or(c.max_iters);
        c.max_f_evals = self.max_f_evals;
        c.validate()?;
        Ok(c)
    }

    pub fn general_config(&self) -> Result<GeneralSolverConfig> {
        let mut c = GeneralSolverConfig::new(self.eps);
        c.gamma0 = self.gamma0.unwrap_or(c.gamma0);
        c.delta = self.delta.unwrap_or(c.delta);
        c.nu = self.nu.unwrap_or(c.nu);
        c.xi = self.xi.unwrap_or(c.xi);
        c.kappa = self.kappa();
        c.rho0 = self.rho0.unwrap_or(c.rho0);
        c.tau0 = self.tau0.unwrap_or(c.tau0);
        c.zeta = self.zeta.unwrap_or(c.zeta);
        c.sigma = self.sigma.unwrap_or(c.sigma);
        c.max_outer = self.max_iters.unwrap_or(c.max_outer);
        c.max_f_evals = self.max_f_evals;
        c.validate()?;
        Ok(c)
    }

    pub fn baseline_config(&self) -> Result<BaselineConfig> {
        let step = self
            .step
            .ok_or_else(|| bad(format!("--step is required for {}", self.algo.name())))?;
        let mut c = BaselineConfig::new(step, self.eps);
        c.max_iters = self.max_iters.unwrap_or(c.max_iters);
        c.max_f_evals = self.max_f_evals;
        c.validate()?;
        Ok(c)
    }
}

/// Maps a solve failure to its exit code.
pub fn exit_code(err: &Error) -> i32 {
    match err.root() {
        Error::Diverged { .. } => EXIT_DIVERGED,
        Error::InvalidParameter(_)
        | Error::UnknownProblem(_)
        | Error::ProblemFile(_)
        | Error::EmptyVector => EXIT_CONFIG,
        _ => EXIT_FAILED,
    }
}

pub fn termination_reason(err: Option<&Error>) -> &'static str {
    match err.map(Error::root) {
        None => "converged",
        Some(Error::Budget { .. }) => "budget",
        Some(Error::NonConvergence { .. }) => "nonconvergence",
        Some(Error::LineSearchStalled { .. }) => "line_search_stalled",
        Some(Error::Stagnation { .. }) => "stagnation",
        Some(Error::Diverged { .. }) => "diverged",
        Some(_) => "error",
    }
}

fn init_logging() {
    let level = match std::env::var("MI_SPLITKIT_LOG").as_deref() {
        Ok("quiet") => log::LevelFilter::Off,
        Ok("info") => log::LevelFilter::Info,
        Ok("debug") => log::LevelFilter::Debug,
        _ => log::LevelFilter::Warn,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .try_init();
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    init_logging();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Solve(a) => run::solve_command(&a),
        Command::Validate(a) => validate::validate_command(&a),
        Command::Scaling(a) => scaling::scaling_command(&a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    }
}

/// 17 significant digits, enough to round-trip any f64.
pub(crate) fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub(crate) fn write_output(path: Option<&std::path::Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| bad(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
