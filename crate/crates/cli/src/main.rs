//! `hgl`: command-line front end for the hgl solvers.

mod commands;
mod config;
mod run;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

const CONFIG_HELP: &str = "\
Configuration file (--config FILE):
  One `key = value` per line; `#` starts a comment. Keys are the long flag
  names of the subcommand (`eta-max` or `eta_max`), e.g.

      lambda = 2.5
      bc = dirichlet
      nx = 65

  Precedence: command-line flag > config file > built-in default. Unknown keys
  are a usage error.

Environment:
  HGL_THREADS   cap on worker threads for parallel sweeps.

Exit codes:
  0 success, 2 usage error, 3 solver-reported failure (diagnostics still
  written), 1 I/O error.

Every run writes its data files and a run_manifest.json into its output
directory (--out, default hgl-out/<subcommand>).";

#[derive(Debug, Parser)]
#[command(name = "hgl", version, about = "Solvers for u_t + Δ²u = det(D²u) + λh", after_help = CONFIG_HELP)]
struct Cli {
    /// Flat key=value parameter file (see below).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Self-similar profile ODE: shooting, sweeps and trajectory checks.
    #[command(subcommand)]
    Selfsim(SelfsimCmd),
    /// Stationary problem on a rectangle.
    #[command(subcommand)]
    Stationary(StationaryCmd),
    /// Radial stationary problem on the unit disc.
    #[command(subcommand)]
    Radial(RadialCmd),
    /// Time evolution with decay and blow-up detection.
    Evolve(EvolveArgs),
    /// Data bundles for the figure scripts.
    #[command(subcommand)]
    Figures(FiguresCmd),
}

#[derive(Debug, Subcommand)]
pub enum SelfsimCmd {
    /// Integrate one slope g'(0) = a.
    Shoot(ShootArgs),
    /// Integrate several slopes in parallel.
    Sweep(SweepArgs),
    /// Re-check a trajectory CSV: equation consistency, blow-up certificate or ansatz residual.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ShootOpts {
    /// Launch abscissa (default: min(1e-3, 1e-2/sqrt|a|)).
    #[arg(long)]
    pub eta0: Option<f64>,
    /// Right end of the integration window [default: 20].
    #[arg(long)]
    pub eta_max: Option<f64>,
    /// Relative step tolerance [default: 1e-10].
    #[arg(long)]
    pub rel_tol: Option<f64>,
    /// Absolute step tolerance [default: 1e-12].
    #[arg(long)]
    pub abs_tol: Option<f64>,
    /// |g| declared as blow-up [default: 1e8].
    #[arg(long)]
    pub g_cap: Option<f64>,
    /// Integrate in log η.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub log_form: Option<bool>,
}

#[derive(Debug, Args)]
pub struct ShootArgs {
    /// g'(0).
    #[arg(long, allow_negative_numbers = true)]
    pub slope: Option<f64>,
    #[command(flatten)]
    pub opts: ShootOpts,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Comma-separated slopes, or lin:LO:HI:N / log:LO:HI:N.
    #[arg(long, allow_hyphen_values = true)]
    pub slopes: Option<String>,
    #[command(flatten)]
    pub opts: ShootOpts,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Trajectory CSV with header eta,g,gp,gpp.
    #[arg(long, value_name = "FILE")]
    pub input: Option<PathBuf>,
    /// g'(0) of the trajectory (default: g' at the first sample).
    #[arg(long, allow_negative_numbers = true)]
    pub slope: Option<f64>,
    /// ReachedEnd | BlowUp | StepUnderflow (default: BlowUp when |g| reaches --g-cap).
    #[arg(long)]
    pub termination: Option<String>,
    /// |g| treated as blow-up when inferring the termination [default: 1e8].
    #[arg(long)]
    pub g_cap: Option<f64>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum StationaryCmd {
    /// Solve for one intensity λ.
    Solve(StationarySolveArgs),
    /// Sweep λ with Picard iteration and bracket the loss of convergence.
    Continue(StationaryContinueArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ProblemOpts {
    /// navier | dirichlet [default: navier].
    #[arg(long)]
    pub bc: Option<String>,
    /// Forcing shape: const | sine | file:PATH [default: const].
    #[arg(long)]
    pub h: Option<String>,
    /// Nodes per side, boundary included [default: 65].
    #[arg(long)]
    pub nx: Option<usize>,
    /// Nodes in y [default: nx].
    #[arg(long)]
    pub ny: Option<usize>,
    /// Stopping tolerance [default: 1e-10].
    #[arg(long)]
    pub tol: Option<f64>,
    /// Iteration limit [default: 500].
    #[arg(long)]
    pub max_iter: Option<usize>,
}

#[derive(Debug, Args)]
pub struct StationarySolveArgs {
    /// Intensity λ [default: 1].
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    /// picard | descent (descent needs dirichlet) [default: picard].
    #[arg(long)]
    pub method: Option<String>,
    #[command(flatten)]
    pub problem: ProblemOpts,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StationaryContinueArgs {
    /// Increasing λ values: comma list, lin:LO:HI:N or log:LO:HI:N.
    #[arg(long)]
    pub lambda_grid: Option<String>,
    #[command(flatten)]
    pub problem: ProblemOpts,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum RadialCmd {
    /// Newton solve for one intensity with h ≡ 1.
    Solve(RadialSolveArgs),
    /// Continuation in λ with fold bracketing.
    Continue(RadialContinueArgs),
}

#[derive(Debug, Args)]
pub struct RadialSolveArgs {
    /// navier | dirichlet [default: dirichlet].
    #[arg(long)]
    pub bc: Option<String>,
    /// Intensity λ [default: 1].
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    /// Radial nodes including r = 0 and r = 1 [default: 401].
    #[arg(long)]
    pub nr: Option<usize>,
    /// Newton tolerance on the residual [default: 1e-10].
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RadialContinueArgs {
    /// navier | dirichlet [default: dirichlet].
    #[arg(long)]
    pub bc: Option<String>,
    /// Largest λ of the coarse walk.
    #[arg(long)]
    pub lambda_max: Option<f64>,
    /// Number of coarse steps on [0, lambda-max] [default: 8].
    #[arg(long)]
    pub steps: Option<usize>,
    /// Radial nodes [default: 401].
    #[arg(long)]
    pub nr: Option<usize>,
    /// Newton tolerance [default: 1e-10].
    #[arg(long)]
    pub tol: Option<f64>,
    /// Bisect until (fail - ok)/fail is at most this [default: 1e-3].
    #[arg(long)]
    pub rel_width: Option<f64>,
    /// Start each Newton solve from zero instead of the last solution.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub cold: Option<bool>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvolveArgs {
    /// navier | dirichlet [default: navier].
    #[arg(long)]
    pub bc: Option<String>,
    /// Intensity λ [default: 0].
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    /// Forcing shape: const | sine | file:PATH [default: sine].
    #[arg(long)]
    pub h: Option<String>,
    /// Initial data: sine:A (A sin πx sin πy) or file:PATH [default: sine:0.01].
    #[arg(long, allow_hyphen_values = true)]
    pub ic: Option<String>,
    /// Nodes per side [default: 33].
    #[arg(long)]
    pub nx: Option<usize>,
    /// Time step [default: 1e-4].
    #[arg(long)]
    pub dt: Option<f64>,
    /// Final time [default: 1].
    #[arg(long)]
    pub t_max: Option<f64>,
    /// Write a snapshot every N steps; 0 keeps only the first and last [default: 0].
    #[arg(long)]
    pub snapshot_every: Option<usize>,
    /// W2,2 norm treated as blow-up (default: 1e6 times the initial or forcing norm).
    #[arg(long)]
    pub blowup_cap: Option<f64>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum FiguresCmd {
    /// The four negative-slope trajectory panels.
    Fig1 {
        /// Output directory; one bundle per panel.
        outdir: PathBuf,
    },
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Solver(String),
    Other(String),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Other(format!("{}: {e}", path.display()))
    }

    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Other(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage: {m}"),
            CliError::Solver(m) => write!(f, "solver failure: {m}"),
            CliError::Other(m) => f.write_str(m),
        }
    }
}

impl From<hgl_core::Error> for CliError {
    fn from(e: hgl_core::Error) -> Self {
        match e {
            e if e.is_usage() => CliError::Usage(e.to_string()),
            hgl_core::Error::Io(_) | hgl_core::Error::Json(_) => CliError::Other(e.to_string()),
            e => CliError::Solver(e.to_string()),
        }
    }
}

fn init_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("HGL_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Usage(format!("HGL_THREADS must be a positive integer, got '{value}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Other(format!("thread pool: {e}")))
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let params = config::Params::load(cli.config.as_deref())?;
    match cli.command {
        Command::Selfsim(SelfsimCmd::Shoot(a)) => commands::selfsim::shoot(&a, params),
        Command::Selfsim(SelfsimCmd::Sweep(a)) => commands::selfsim::sweep(&a, params),
        Command::Selfsim(SelfsimCmd::Verify(a)) => commands::selfsim::verify(&a, params),
        Command::Stationary(StationaryCmd::Solve(a)) => commands::stationary::solve(&a, params),
        Command::Stationary(StationaryCmd::Continue(a)) => commands::stationary::continuation(&a, params),
        Command::Radial(RadialCmd::Solve(a)) => commands::radial::solve(&a, params),
        Command::Radial(RadialCmd::Continue(a)) => commands::radial::continuation(&a, params),
        Command::Evolve(a) => commands::evolve::evolve(&a, params),
        Command::Figures(FiguresCmd::Fig1 { outdir }) => commands::figures::fig1(&outdir, params),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = init_threads().and_then(|()| dispatch(cli));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hgl: {e}");
            ExitCode::from(e.code())
        }
    }
}
