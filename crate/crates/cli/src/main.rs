#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sfbm::SpectrumMethod;

mod commands;

/// Spherical fractional Brownian motion: spectra, simulation and
/// conditional-variance experiments.
#[derive(Debug, Parser)]
#[command(name = "sfbm", version)]
struct Cli {
    /// Directory for outputs without an explicit path.
    #[arg(long, global = true, env = "SFBM_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,

    /// Run every loop on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute the angular power spectrum and write the cache JSON and a CSV.
    Spectrum(SpectrumArgs),
    /// Run property suites and write a JSON report.
    Verify(VerifyArgs),
    /// Draw truncated Karhunen-Loeve realizations on a point set.
    Simulate(SimulateArgs),
    /// Run the conditional-variance experiment.
    Slnd(SlndArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Method {
    Quadrature,
    Mehler,
    ClosedForm,
}

impl From<Method> for SpectrumMethod {
    fn from(m: Method) -> Self {
        match m {
            Method::Quadrature => SpectrumMethod::Quadrature,
            Method::Mehler => SpectrumMethod::Mehler,
            Method::ClosedForm => SpectrumMethod::ClosedForm,
        }
    }
}

#[derive(Debug, Args, serde::Serialize)]
struct SpectrumArgs {
    #[arg(long)]
    hurst: f64,
    #[arg(long)]
    lmax: usize,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    /// Cache JSON path; the CSV is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "quadrature")]
    #[serde(skip)]
    method: Method,
}

#[derive(Debug, Args, serde::Serialize)]
struct VerifyArgs {
    #[arg(long, default_value = "all")]
    suite: String,
    /// Comma-separated Hurst indices.
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.25, 0.4, 0.5])]
    hurst_set: Vec<f64>,
    #[arg(long)]
    report: Option<PathBuf>,
    /// Spectrum cache files to use instead of rebuilding.
    #[arg(long)]
    spectrum: Vec<PathBuf>,
    #[arg(long, default_value_t = 20_170_101)]
    seed: u64,
}

#[derive(Debug, Args, serde::Serialize)]
struct SimulateArgs {
    #[arg(long)]
    hurst: f64,
    #[arg(long, default_value_t = 128)]
    lmax: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// `fibonacci:<n>`.
    #[arg(long, conflicts_with = "points", required_unless_present = "points")]
    grid: Option<String>,
    /// CSV with header `theta,phi`.
    #[arg(long)]
    points: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    samples: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, serde::Serialize)]
struct SlndArgs {
    #[arg(long)]
    hurst: f64,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 6)]
    nmax: usize,
    #[arg(long, default_value_t = 0.01, allow_negative_numbers = true)]
    eps_min: f64,
    #[arg(long, default_value_t = 1.0)]
    eps_max: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(commands::Outcome::Success) => ExitCode::SUCCESS,
        Ok(commands::Outcome::ChecksFailed) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 2 } else { 3 })
        }
    }
}
