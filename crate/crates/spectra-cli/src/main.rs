//! `spectra` — command-line front end for the interference-channel spectrum
//! optimizer: channel ingestion, closed-form and LP solvers, brute-force
//! verification, and plot-data export.
//!
//! Exit codes: 0 success, 1 input/usage error, 2 verification failure.
//! Identical inputs (and seeds) produce byte-identical outputs; the manifest
//! timestamp is recorded only when requested via `--timestamp` or the
//! `SOURCE_DATE_EPOCH` environment variable.

// `!(x <= tol)`-style guards deliberately reject NaN together with the
// out-of-range values; the un-negated comparisons clippy suggests would
// let NaN slip through validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod input;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "spectra",
    version,
    about = "Globally optimal spectrum and power allocation for interference channels"
)]
struct Cli {
    /// Record a timestamp in the output manifest (otherwise null, keeping
    /// outputs byte-reproducible). `SOURCE_DATE_EPOCH` overrides the clock.
    #[arg(long, global = true)]
    timestamp: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the pairwise strong-interference condition that certifies FDMA
    /// (orthogonal operation) as optimal, per pair and per sub-channel.
    FdmaCheck(FdmaCheckArgs),
    /// Solve the two-user symmetric channel in closed form: flat band via
    /// --alpha, or frequency-selective via --spec; optional curve CSVs.
    Sym2(Sym2Args),
    /// Solve the general weighted sum-rate problem through the concave
    /// envelope linear program; optional allocation/hull CSVs.
    Optimize(OptimizeArgs),
    /// Cross-check a channel end to end (solver vs brute force vs dual
    /// bound) and run the seeded randomized property suite.
    Verify(VerifyArgs),
    /// Emit plot-ready CSVs: the sharing/FDMA regime boundary over the
    /// coupling strength, and envelope curve sections at one coupling.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
struct FdmaCheckArgs {
    /// Channel specification JSON.
    #[arg(long)]
    spec: PathBuf,
}

#[derive(Debug, Args)]
struct Sym2Args {
    /// Cross gain of the flat symmetric channel (flat mode).
    #[arg(long)]
    alpha: Option<f64>,
    /// Frequency-selective symmetric channel JSON (selective mode).
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Sum power budget across both users.
    #[arg(long)]
    power: f64,
    /// Prefix for the envelope-curve CSV (`<prefix>_curves.csv`).
    #[arg(long)]
    csv: Option<String>,
    /// Rows in the curve CSV minus one (samples are equally spaced).
    #[arg(long, default_value_t = 240)]
    csv_steps: usize,
}

#[derive(Debug, Args)]
struct OptimizeArgs {
    /// Channel specification JSON.
    #[arg(long)]
    spec: PathBuf,
    /// Grid points per PSD axis (default: sized by user count).
    #[arg(long)]
    grid: Option<usize>,
    /// Override the per-user power budgets, comma-separated.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    budgets: Option<Vec<f64>>,
    /// Prefix for CSV export (`<prefix>_allocation.csv`, `<prefix>_hull_<m>.csv`).
    #[arg(long)]
    csv: Option<String>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Channel specification JSON.
    #[arg(long)]
    spec: PathBuf,
    /// Brute-force spend levels per user per sub-band (default by user count).
    #[arg(long)]
    levels: Option<usize>,
    /// Equal sub-bands per sub-channel in the brute-force search.
    #[arg(long)]
    splits: Option<usize>,
    /// Seed for the randomized property suite.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Prefix for the CSVs (`<prefix>_region.csv`, `<prefix>_curves.csv`).
    #[arg(long)]
    csv: String,
    /// Coupling strength for the curve section CSV.
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    /// Sample count for the regime-boundary CSV over alpha in [0.02, 0.48].
    #[arg(long, default_value_t = 93)]
    alpha_steps: usize,
    /// Upper end of the power axis in the curve CSV (default: past the
    /// FDMA-side tangency).
    #[arg(long)]
    power_max: Option<f64>,
    /// Rows in the curve CSV minus one.
    #[arg(long, default_value_t = 240)]
    power_steps: usize,
}

/// What a successfully-parsed run can report back.
enum Outcome {
    Success,
    /// Inputs were fine but a verification check failed (exit 2).
    ChecksFailed,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    let stamp = cli.timestamp;
    let run = match cli.command {
        Command::FdmaCheck(args) => commands::fdma_check(&args, stamp),
        Command::Sym2(args) => commands::sym2(&args, stamp),
        Command::Optimize(args) => commands::optimize(&args, stamp),
        Command::Verify(args) => commands::verify(&args, stamp),
        Command::Sweep(args) => commands::sweep(&args, stamp),
    };
    match run {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::ChecksFailed) => ExitCode::from(2),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
