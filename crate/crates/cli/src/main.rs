use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;

#[derive(Parser)]
#[command(
    name = "l1drift",
    version,
    about = "Minimum L1-norm drift estimation under small Gaussian noise"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw one driver path and simulate the process.
    Simulate(Flags),
    /// Simulate one path and estimate the drift from it.
    Estimate(Flags),
    /// Compare the rescaled estimation error with the limit law.
    LimitDist(Flags),
    /// Exceedance frequencies of the estimator across noise levels.
    Consistency(Flags),
    /// Check the Gaussian maximal inequalities by simulation.
    Bounds(Flags),
    /// Separation of the noise-free flows.
    Gdelta(Flags),
}

/// Every flag maps onto the config key of the same name and overrides the
/// value from `--config`.
#[derive(Args, Debug, Default)]
pub struct Flags {
    /// Flat `key = value` config file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Covariance kernel, e.g. `fbm:H=0.7` or `tabulated:cov.csv`
    #[arg(long)]
    kernel: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    theta0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<f64>,
    #[arg(long, conflicts_with = "eps_list")]
    eps: Option<f64>,
    /// Comma-separated noise levels
    #[arg(long)]
    eps_list: Option<String>,
    /// Number of grid steps
    #[arg(long)]
    n: Option<usize>,
    /// Time horizon
    #[arg(long = "T")]
    horizon: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    theta_lo: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    theta_hi: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    replicates: Option<usize>,
    /// Root seed; replicate k draws from stream k
    #[arg(long)]
    seed: Option<u64>,
    /// Path sampler: cholesky or circulant
    #[arg(long)]
    sampler: Option<String>,
    /// Simulation scheme: exact or euler
    #[arg(long)]
    scheme: Option<String>,
    /// Coarse scan points of the estimator
    #[arg(long)]
    scan_points: Option<usize>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; does not change results
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    let result = match cli.command {
        Command::Simulate(f) => commands::simulate(&f),
        Command::Estimate(f) => commands::estimate(&f),
        Command::LimitDist(f) => commands::experiment("limit-dist", &f),
        Command::Consistency(f) => commands::experiment("consistency", &f),
        Command::Bounds(f) => commands::experiment("bounds", &f),
        Command::Gdelta(f) => commands::gdelta(&f),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 2 } else { 1 })
        }
    }
}
