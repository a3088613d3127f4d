//! `qfgeo`: network generation, stretch studies, model fitting and
//! simulation sweeps.

mod commands;
mod failure;
mod provenance;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qfgeo_core::stretch::STUDY_DENSITIES;

use failure::CliResult;

#[derive(Parser, Debug)]
#[command(name = "qfgeo", version, about = "Bounded elliptic search: analysis and mesh routing simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate random unit-disk networks.
    Netgen(NetgenArgs),
    /// Sample path stretch and observed ellipse factors over random networks.
    Stretch(StretchArgs),
    /// Fit the ellipse model by quantile regression on stretch samples.
    Fit(FitArgs),
    /// Compare a model's per-density coverage with the reference row.
    Validate(ValidateArgs),
    /// Run one simulated trial.
    Simulate(SimulateArgs),
    /// Run a grid of trials in parallel; completed cells are skipped.
    Sweep(SweepArgs),
    /// Aggregate sweep results into summary tables.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
struct NetgenArgs {
    #[arg(long, default_value_t = 343)]
    size: usize,
    #[arg(long, default_value_t = 2.0)]
    density: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Number of networks to write.
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct StretchArgs {
    #[arg(long, default_value_t = 343)]
    size: usize,
    #[arg(long, value_delimiter = ',', default_values_t = STUDY_DENSITIES)]
    densities: Vec<f64>,
    /// Networks per density.
    #[arg(long, default_value_t = 2000)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output CSV file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct FitArgs {
    /// Stretch sample CSV files.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long, default_value_t = 0.99)]
    tau: f64,
    #[arg(long, default_value_t = 2.0)]
    gamma: f64,
    #[arg(long, default_value_t = 1.05)]
    ell_min: f64,
    /// Directory for `model.txt` and `coverage.csv`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    /// Stretch sample CSVs; without them a fresh reference study is run.
    #[arg(long = "input")]
    inputs: Vec<PathBuf>,
    /// Model file; defaults to the shipped coefficients.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, default_value_t = 343)]
    size: usize,
    #[arg(long, default_value_t = 2000)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Allowed deviation from the reference row, in percentage points.
    #[arg(long, default_value_t = 1.5)]
    tolerance: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Trial settings layered over `--config` (or the defaults).
#[derive(Args, Debug, Clone, Default)]
pub struct TrialOverrides {
    /// key=value trial configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// qfgeo, gf or mcr.
    #[arg(long)]
    pub protocol: Option<String>,
    /// Search without a bounding ellipse (QF-Geo-A).
    #[arg(long)]
    pub unbounded: bool,
    #[arg(long)]
    pub density: Option<f64>,
    #[arg(long)]
    pub size: Option<usize>,
    #[arg(long)]
    pub flows: Option<usize>,
    /// Node speed in m/s; 0 disables mobility.
    #[arg(long)]
    pub mobility: Option<f64>,
    #[arg(long)]
    pub jammer: Option<bool>,
    /// Trial length in seconds.
    #[arg(long)]
    pub duration: Option<f64>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    trial: TrialOverrides,
    /// Directory for `report.json`, `events.csv` and `config.txt`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Base trial configuration; the grid overrides its scenario keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_values_t = [27usize, 64, 125, 216])]
    pub sizes: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = STUDY_DENSITIES)]
    pub densities: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [1usize, 3, 7, 10])]
    pub flows: Vec<usize>,
    /// Speeds in m/s; 0 is static.
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 10.0])]
    pub mobility: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [false, true])]
    pub jammer: Vec<bool>,
    /// Any of qfgeo, qfgeo_unbounded, gf, mcr.
    #[arg(long, value_delimiter = ',', default_values = ["qfgeo", "qfgeo_unbounded", "gf", "mcr"])]
    pub protocols: Vec<String>,
    /// Trials per cell.
    #[arg(long, default_value_t = 4)]
    pub trials: u64,
    /// Master seed.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub duration: Option<f64>,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Sweep output directory.
    #[arg(long)]
    input: PathBuf,
    /// Where to write the tables; defaults to the input directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Netgen(a) => commands::netgen(a.size, a.density, a.seed, a.count, &a.out),
        Command::Stretch(a) => commands::stretch(a.size, a.densities, a.trials, a.seed, &a.out),
        Command::Fit(a) => commands::fit(&a.inputs, a.tau, a.gamma, a.ell_min, &a.out),
        Command::Validate(a) => commands::validate(&commands::ValidateOptions {
            inputs: a.inputs,
            model: a.model,
            size: a.size,
            trials: a.trials,
            seed: a.seed,
            tolerance: a.tolerance,
            out: a.out,
        }),
        Command::Simulate(a) => commands::simulate(&a.trial, &a.out),
        Command::Sweep(a) => sweep::sweep(&a),
        Command::Report(a) => sweep::report(&a.input, a.out.as_deref().unwrap_or(&a.input)),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            eprintln!("qfgeo: {}", first.trim_start_matches("error: "));
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("qfgeo: {f}");
            f.exit_code()
        }
    }
}
