//! `growthlab`: simulate activity data, fit growth and heterogeneity
//! exponents, and run parameter sweeps.
//!
//! Exit status is 0 on success, 1 for usage errors, 2 for unreadable or
//! unsuitable data and 3 for internal failures.

mod commands;
mod input;
mod manifest;
mod plots;
mod svg;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data(String),
    Internal(String),
}

impl From<growthlab::Error> for Failure {
    fn from(e: growthlab::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Internal(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Internal(m) => m,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "growthlab", version, about = "Accelerating growth of user-activity systems")]
pub struct Cli {
    /// Where to write the run manifest. Defaults to `manifest.json` in the
    /// output directory, or standard error for commands without one.
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic day-by-day series.
    Simulate(SimulateArgs),
    /// Fit the growth exponent gamma of F ~ P^gamma.
    Fit(FitArgs),
    /// Estimate beta, predict gamma from it and compare with the fitted gamma.
    Predict(PredictArgs),
    /// Sweep (C, beta) cells and fit gamma in each.
    Sweep(SweepArgs),
    /// Rescale daily distributions by f_max and fit the pooled exponent.
    Collapse(CollapseArgs),
    /// Growth, collapse and prediction tables for one input.
    Report(ReportArgs),
    /// Rerun the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolArg {
    /// Each day truncated at the f_max implied by its population.
    Coupled,
    /// Every day truncated at `--upper`.
    Fixed,
    /// No upper cutoff.
    Unbounded,
}

#[derive(Args, Debug, Serialize)]
pub struct SimulateArgs {
    /// Power-law exponent of individual activity.
    #[arg(long)]
    pub beta: f64,
    /// Lower activity cutoff.
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    #[arg(long, value_enum, default_value_t = ProtocolArg::Coupled)]
    pub protocol: ProtocolArg,
    /// Upper cutoff for `--protocol fixed`.
    #[arg(long)]
    pub upper: Option<f64>,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    pub days: u64,
    #[arg(long, default_value_t = 1000)]
    pub pmin: u64,
    #[arg(long, default_value_t = 100_000)]
    pub pmax: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Round activities down to whole counts (at least 1) and write events.
    #[arg(long)]
    pub integerize: bool,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct FitArgs {
    /// Events (.csv, .jsonl), a snapshot or histogram table (.tsv), or a
    /// `simulate` output directory.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub bootstrap: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write a log-log scatter with the fitted line.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize, Clone, Copy)]
pub struct CollapseFlags {
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
    pub bins_per_decade: u64,
    /// Pool raw counts across days instead of averaging per-day densities.
    #[arg(long)]
    pub pooled_counts: bool,
}

#[derive(Args, Debug, Serialize)]
pub struct PredictArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub collapse: CollapseFlags,
    #[arg(long, default_value_t = 1000)]
    pub bootstrap: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug, Serialize)]
pub struct SweepArgs {
    /// Comma-separated lower cutoffs; defaults to 1,2,...,10.
    #[arg(long, value_delimiter = ',')]
    pub c_grid: Option<Vec<f64>>,
    /// Comma-separated exponents; defaults to `--n-beta` values uniform in 1/beta.
    #[arg(long, value_delimiter = ',')]
    pub beta_grid: Option<Vec<f64>>,
    #[arg(long, default_value_t = 40)]
    pub n_beta: usize,
    #[arg(long, value_enum, default_value_t = ProtocolArg::Coupled)]
    pub protocol: ProtocolArg,
    #[arg(long)]
    pub upper: Option<f64>,
    /// Days per cell.
    #[arg(long, default_value_t = 100)]
    pub days: usize,
    #[arg(long, default_value_t = 100)]
    pub pmin: u64,
    #[arg(long, default_value_t = 10_000)]
    pub pmax: u64,
    #[arg(long, default_value_t = 200)]
    pub bootstrap: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Write gamma against 1/beta with the theoretical curve.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct CollapseArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Score this exponent against the pooled curve instead of the fitted one.
    #[arg(long)]
    pub beta: Option<f64>,
    #[command(flatten)]
    pub collapse: CollapseFlags,
    #[arg(long, default_value_t = 1000)]
    pub bootstrap: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write raw and rescaled distributions.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct ReportArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub collapse: CollapseFlags,
    #[arg(long, default_value_t = 1000)]
    pub bootstrap: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug, Serialize)]
pub struct ReplayArgs {
    /// Manifest written by an earlier run.
    pub manifest_file: PathBuf,
}

fn init_threads() -> Result<(), Failure> {
    let n = match std::env::var("GROWTHLAB_THREADS") {
        Err(_) => return Ok(()),
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| Failure::Usage(format!("GROWTHLAB_THREADS must be a non-negative integer, got {v:?}")))?,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Internal(e.to_string()))
}

pub fn parse(args: impl IntoIterator<Item = OsString>) -> Result<Cli, clap::Error> {
    Cli::try_parse_from(args)
}

fn main() -> ExitCode {
    let argv: Vec<OsString> = std::env::args_os().collect();
    let cli = match parse(argv.iter().cloned()) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let args: Vec<String> = argv[1..].iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let result = std::panic::catch_unwind(|| init_threads().and_then(|()| commands::run(&cli, &args)));
    match result {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(f)) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
        Err(_) => ExitCode::from(3),
    }
}
