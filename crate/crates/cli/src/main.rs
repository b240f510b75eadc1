//! `fracount`: simulate, count, fit, combine and forecast unique-population
//! counts from the command line.
//!
//! Exit codes: 0 ok, 2 usage or invalid input, 3 I/O failure, 4 the fit did
//! not converge or no step could be used.

mod commands;
mod manifest;

use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_IO: u8 = 3;
pub const EXIT_NUMERIC: u8 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "fracount",
    version,
    about = "Fractal scaling of unique-population counts"
)]
pub struct Cli {
    /// Write a JSON manifest of this run, replayable with `fracount replay`.
    #[arg(long, global = true, value_name = "PATH")]
    pub manifest: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Simulate a stable population; writes an event log and its counts.
    Simulate(SimulateArgs),
    /// Count distinct ids per interval in an event log.
    Count(CountArgs),
    /// Fit the norm exponent p to a counts CSV.
    Fit(FitArgs),
    /// Combine the count column with the L^p-norm.
    Combine(CombineArgs),
    /// Forecast cumulative reach.
    Forecast(ForecastArgs),
    /// Emit per-interval plot series.
    Plotdata(PlotArgs),
    /// Re-run a recorded command and check its outputs are identical.
    Replay(ReplayArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Count(_) => "count",
            Command::Fit(_) => "fit",
            Command::Combine(_) => "combine",
            Command::Forecast(_) => "forecast",
            Command::Plotdata(_) => "plotdata",
            Command::Replay(_) => "replay",
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    /// key = value config file (n, shape_b, horizon, seed, scale_a, width,
    /// burn_in, max_events, observed_fraction). Replaces the model flags.
    #[arg(long, conflicts_with_all = ["n", "shape_b", "scale_a", "horizon", "width", "seed", "burn_in"])]
    pub config: Option<PathBuf>,
    /// Population size N.
    #[arg(long)]
    pub n: Option<u64>,
    /// Pareto shape B, in (0, 1).
    #[arg(long)]
    pub shape_b: Option<f64>,
    /// Pareto scale A in time units [default: 0.01 x width].
    #[arg(long)]
    pub scale_a: Option<f64>,
    /// Number of output intervals.
    #[arg(long)]
    pub horizon: Option<u32>,
    /// Interval width in time units [default: 1].
    #[arg(long)]
    pub width: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Intervals simulated and discarded before interval 1 [default: 0].
    #[arg(long)]
    pub burn_in: Option<u32>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Event log file name; the extension picks the format.
    #[arg(long, default_value = "events.jsonl")]
    pub events: String,
}

#[derive(Debug, Args, Serialize)]
pub struct CountArgs {
    /// Event log (.csv or .jsonl).
    pub events: PathBuf,
    /// Interval width, in the timestamps' units (days for ISO instants).
    #[arg(long, default_value_t = 1.0)]
    pub width: f64,
    /// Start of interval 1: a number, an ISO-8601 instant, or `first` for the
    /// earliest event's bucket [default: 0, or `first` for ISO timestamps].
    #[arg(long)]
    pub origin: Option<String>,
    /// Abort on the first malformed record (default).
    #[arg(long, conflicts_with = "lenient")]
    pub strict: bool,
    /// Skip malformed records and report how many were skipped.
    #[arg(long)]
    pub lenient: bool,
    /// Event format, overriding the file extension.
    #[arg(long)]
    pub format: Option<String>,
    /// Counts CSV path [default: stdout].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct FitArgs {
    /// Counts CSV (`interval,count,cumulative`).
    pub counts: PathBuf,
    #[arg(long)]
    pub damping: Option<f64>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long)]
    pub max_iterations: Option<u32>,
    #[arg(long)]
    pub initial_p: Option<f64>,
    /// Also write the fit JSON here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct CombineArgs {
    pub counts: PathBuf,
    /// Norm exponent, >= 1, or `inf`.
    #[arg(long)]
    pub p: String,
}

#[derive(Debug, Args, Serialize)]
pub struct ForecastArgs {
    pub counts: PathBuf,
    /// Number of intervals to cover, from interval 1.
    #[arg(long)]
    pub horizon: usize,
    /// Forecast method.
    #[arg(long, default_value = "scaling")]
    pub method: String,
    /// Use this fit JSON instead of fitting the counts.
    #[arg(long)]
    pub fit: Option<PathBuf>,
    /// Forecast even when the fit did not converge.
    #[arg(long)]
    pub force: bool,
    /// Forecast CSV path [default: stdout].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct PlotArgs {
    pub counts: PathBuf,
    /// Fit JSON as written by `fracount fit`.
    pub fit: PathBuf,
    /// Plot CSV path [default: stdout].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ReplayArgs {
    /// Manifest written by an earlier `--manifest` run.
    #[arg(value_name = "MANIFEST")]
    pub path: PathBuf,
}

/// A failed command: message for stderr and the exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<fractal_counts::Error> for Failure {
    fn from(e: fractal_counts::Error) -> Self {
        use fractal_counts::Error as E;
        let code = match &e {
            E::Io(_) => EXIT_IO,
            E::FitInfeasible(_) => EXIT_NUMERIC,
            _ => EXIT_USAGE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure {
            code: EXIT_IO,
            message: e.to_string(),
        }
    }
}

/// What a command produced, for printing and for the manifest.
#[derive(Debug, Default)]
pub struct Run {
    pub stdout: Vec<u8>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub seed: Option<u64>,
}

/// Runs a parsed command line, printing its output; returns the exit code.
pub fn execute(cli: &Cli, argv: &[String]) -> u8 {
    let mut run = Run::default();
    let result = commands::dispatch(&cli.command, &mut run);
    let mut out = io::stdout().lock();
    if out
        .write_all(&run.stdout)
        .and_then(|_| out.flush())
        .is_err()
    {
        return EXIT_IO;
    }
    let code = match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    };
    if let Some(path) = &cli.manifest {
        if let Err(f) = manifest::record(path, cli, argv, &run, code) {
            eprintln!("error: writing manifest {}: {}", path.display(), f.message);
            return if code == EXIT_OK { f.code } else { code };
        }
    }
    code
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = Cli::parse();
    ExitCode::from(execute(&cli, &argv))
}
