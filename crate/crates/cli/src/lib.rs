//! The `cddp` command line: instance generation, solving, plan evaluation,
//! MPS export and verification, SVG maps and batch benchmarks.
//!
//! Exit codes: 0 feasible, 2 infeasible best (or a failed verification),
//! 3 search or model too large, 1 usage and I/O errors.

pub mod bench;
pub mod commands;
pub mod plot;
pub mod report;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cddp::exact::BatteryRows;
use cddp::ga::CrossoverKind;
use cddp::solution::ObjectiveKind;

pub const EXIT_FEASIBLE: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_INFEASIBLE: u8 = 2;
pub const EXIT_TOO_LARGE: u8 = 3;

/// Environment variable naming the directory that holds run directories.
pub const OUT_DIR_ENV: &str = "CDDP_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "runs";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] cddp::Error),

    #[error("{0}")]
    Usage(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(cddp::Error::SearchTooLarge { .. } | cddp::Error::ModelTooLarge { .. }) => EXIT_TOO_LARGE,
            _ => EXIT_USAGE,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "cddp", version, about = "Communication-aware drone delivery planning")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a benchmark instance.
    Gen(GenArgs),
    /// Solve an instance with the GA or exhaustive enumeration.
    Solve(SolveArgs),
    /// Check a plan against an instance and print the result JSON.
    Eval(EvalArgs),
    /// Write the MIP model of an instance in free MPS.
    ExportMps(ExportArgs),
    /// Check an external solver's `name value` solution.
    VerifyMps(VerifyArgs),
    /// Render an SVG route map.
    Plot(PlotArgs),
    /// Run a grid of generated instances and write one CSV row per case.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algo {
    Ga,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CrossoverArg {
    Sbx,
    OnePoint,
}

impl From<CrossoverArg> for CrossoverKind {
    fn from(c: CrossoverArg) -> Self {
        match c {
            CrossoverArg::Sbx => CrossoverKind::Sbx,
            CrossoverArg::OnePoint => CrossoverKind::OnePoint,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BatteryRowsArg {
    Verbatim,
    DepotReset,
}

impl From<BatteryRowsArg> for BatteryRows {
    fn from(b: BatteryRowsArg) -> Self {
        match b {
            BatteryRowsArg::Verbatim => BatteryRows::Verbatim,
            BatteryRowsArg::DepotReset => BatteryRows::DepotReset,
        }
    }
}

fn parse_customers(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(n) => Ok(n),
        Err(e) => Err(e.to_string()),
    }
}

fn parse_objective(s: &str) -> Result<ObjectiveKind, String> {
    s.parse().map_err(|e: cddp::Error| e.to_string())
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Setting code such as PUT (network U/P, customers U/P, windows L/T).
    #[arg(long, required_unless_present_any = ["illustrative", "config"])]
    pub setting: Option<String>,
    #[arg(long, value_parser = parse_customers, required_unless_present_any = ["illustrative", "config"])]
    pub customers: Option<usize>,
    /// Defaults to 0, or to the config file's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Generator config JSON; --setting, --customers and --seed override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Build the fixed nine-station example instead of a generated one.
    #[arg(long, conflicts_with_all = ["setting", "customers", "config"])]
    pub illustrative: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long, value_enum, default_value_t = Algo::Ga)]
    pub algo: Algo,
    #[arg(long, value_parser = parse_objective, default_value = "total_distance")]
    pub objective: ObjectiveKind,
    /// Per-trip handover limit; overrides the instance.
    #[arg(long)]
    pub hmax: Option<f64>,
    /// Per-trip expected outage limit in seconds; overrides the instance.
    #[arg(long)]
    pub omax: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// GA config JSON; the flags below override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub generations: Option<usize>,
    #[arg(long)]
    pub population: Option<usize>,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    pub time_limit: Option<f64>,
    #[arg(long, value_enum)]
    pub crossover: Option<CrossoverArg>,
    #[arg(long, default_value_t = 3)]
    pub max_interior: usize,
    #[arg(long)]
    pub max_trips: Option<usize>,
    /// Comma-separated charging-station and waypoint ids for the enumeration.
    #[arg(long, value_delimiter = ',')]
    pub whitelist: Option<Vec<usize>>,
    #[arg(long, default_value_t = 1e8)]
    pub budget: f64,
    /// Lower bound used to report a relative gap.
    #[arg(long)]
    pub bound: Option<f64>,
    /// Output directory; defaults to a fresh run directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long)]
    pub plan: PathBuf,
    #[arg(long)]
    pub hmax: Option<f64>,
    #[arg(long)]
    pub omax: Option<f64>,
    /// Write the result JSON here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long)]
    pub hmax: Option<f64>,
    #[arg(long)]
    pub omax: Option<f64>,
    /// Battery rows for depots; defaults to the instance battery mode.
    #[arg(long, value_enum)]
    pub battery_rows: Option<BatteryRowsArg>,
    #[arg(long, default_value_t = 2_000_000)]
    pub max_columns: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub instance: PathBuf,
    /// Solution file with one `name value` pair per line.
    #[arg(long)]
    pub solution: PathBuf,
    #[arg(long)]
    pub hmax: Option<f64>,
    #[arg(long)]
    pub omax: Option<f64>,
    #[arg(long, value_enum)]
    pub battery_rows: Option<BatteryRowsArg>,
    #[arg(long)]
    pub bound: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long)]
    pub instance: PathBuf,
    /// Plan JSON; without it only cells and nodes are drawn.
    #[arg(long)]
    pub plan: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "PUL")]
    pub settings: Vec<String>,
    #[arg(long, value_delimiter = ',', value_parser = parse_customers, default_value = "1")]
    pub sizes: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub seeds: Vec<u64>,
    /// Threshold cases, e.g. `none,(20,10),(10,10)`.
    #[arg(long, default_value = "none")]
    pub cases: String,
    #[arg(long, value_enum, default_value_t = bench::AlgoChoice::Auto)]
    pub algo: bench::AlgoChoice,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub generations: Option<usize>,
    #[arg(long)]
    pub population: Option<usize>,
    #[arg(long)]
    pub time_limit: Option<f64>,
    #[arg(long, default_value_t = 3)]
    pub max_interior: usize,
    #[arg(long, default_value_t = 1e8)]
    pub budget: f64,
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_FEASIBLE };
        }
    };
    match commands::run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
