mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Numerical laboratory for resonant cluster beating in the quintic NLS on
/// the circle.
#[derive(Debug, Parser)]
#[command(name = "beatlab", version, propagate_version = true)]
pub struct Cli {
    /// Directory for outputs and run manifests.
    #[arg(long, global = true, env = "BEATLAB_OUT_DIR", default_value = "beatlab-out")]
    pub out_dir: PathBuf,
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the sequence of admissible cluster centres.
    Sequence(SequenceArgs),
    /// Check closure and cross-cluster conditions for a family (exit 3 on
    /// violations).
    Verify(VerifyArgs),
    /// Integrate the one-cluster phase-plane model.
    Model(ModelArgs),
    /// Run the split-step solver from explicit initial data.
    Simulate(SimulateArgs),
    /// Simulate one beating scenario and compare it with the model.
    Beating(BeatingArgs),
    /// Run a scenario over several values of nu and fit the leakage exponent.
    Sweep(SweepArgs),
    /// Plan initial data so that cluster k beats with period 2 N Lambda_k / nu.
    Schedule(ScheduleArgs),
}

#[derive(Debug, Args)]
pub struct SequenceArgs {
    /// Existing centres to extend (comma separated).
    #[arg(long, value_delimiter = ',', default_value = "3")]
    pub prefix: Vec<i128>,
    /// Total number of centres wanted.
    #[arg(long, default_value_t = 3)]
    pub count: usize,
    /// Candidates scanned past each growth bound 12 n^2.
    #[arg(long, default_value_t = 1_000_000)]
    pub window: i128,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Cluster centres (comma separated).
    #[arg(long, value_delimiter = ',', required = true)]
    pub centers: Vec<i128>,
    /// Accept centres that violate the growth condition.
    #[arg(long)]
    pub relaxed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BranchArg {
    /// Require K0 < 1/2.
    Lower,
    /// Require K0 > 1/2.
    Upper,
    /// Accept either side and compare T(K0) with T(1 - K0).
    Check,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Cluster constant C (> 2).
    #[arg(long = "C", default_value_t = 9.0)]
    pub c: f64,
    /// Initial normalised action.
    #[arg(long = "K0")]
    pub k0: f64,
    /// Initial phase phi.
    #[arg(long, default_value_t = 0.0)]
    pub phi0: f64,
    #[arg(long, value_enum, default_value_t = BranchArg::Lower)]
    pub branch: BranchArg,
    /// Model-time span; defaults to two half-periods.
    #[arg(long)]
    pub span: Option<f64>,
    /// Integration tolerance.
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    /// Number of uniform samples in the CSV.
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// JSON array of `[j, re, im]` Fourier coefficients.
    #[arg(long, conflicts_with = "cluster")]
    pub initial: Option<PathBuf>,
    /// Use the single-cluster data centred at this mode instead.
    #[arg(long)]
    pub cluster: Option<i128>,
    /// K0 of the single-cluster data.
    #[arg(long = "K0", default_value_t = 0.3)]
    pub k0: f64,
    #[arg(long, default_value_t = 1e-2)]
    pub nu: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    /// Fourier truncation M.
    #[arg(long, default_value_t = 32)]
    pub m: usize,
    #[arg(long, default_value_t = 3)]
    pub pad: usize,
    #[arg(long, default_value_t = 1.0)]
    pub t_end: f64,
    /// Steps between samples.
    #[arg(long, default_value_t = 100)]
    pub stride: usize,
    /// Modes whose actions are written to the CSV (comma separated).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub modes: Vec<i64>,
}

#[derive(Debug, Args)]
pub struct BeatingArgs {
    /// TOML scenario file; defaults are used for missing keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override nu.
    #[arg(long)]
    pub nu: Option<f64>,
    /// Integrate the model only.
    #[arg(long)]
    pub skip_pde: bool,
    /// Stem of the output files.
    #[arg(long, default_value = "beating")]
    pub name: String,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// TOML scenario file; `nu` is replaced by each sweep value.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Values of nu (comma separated).
    #[arg(long, value_delimiter = ',', default_value = "1e-2,1e-3")]
    pub nus: Vec<f64>,
    #[arg(long, default_value = "sweep")]
    pub name: String,
}

#[derive(Debug, Args)]
pub struct ScheduleArgs {
    /// Cluster centres (comma separated).
    #[arg(long, value_delimiter = ',', default_value = "3")]
    pub centers: Vec<i128>,
    /// Target ratios Lambda_k (comma separated, one per cluster).
    #[arg(long, value_delimiter = ',', default_value = "1.0")]
    pub lambdas: Vec<f64>,
    #[arg(long, default_value_t = 1e-2)]
    pub nu: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).init();
    match commands::dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
