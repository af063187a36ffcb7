mod commands;
mod config;
mod context;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{CliError, Kind};

/// Benefit take-up pipeline: simulate, select, covariates, estimate,
/// metrics, report, plus a Monte Carlo harness.
#[derive(Debug, Parser)]
#[command(name = "takeup", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

impl Switch {
    pub fn on(self) -> bool {
        self == Switch::On
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelChoice {
    M0,
    M1,
    M2,
    M3,
    All,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Run configuration (TOML). Defaults to takeup.toml in $TAKEUP_CONFIG_DIR.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Directories holding upstream artifacts, searched in order.
    #[arg(long, value_name = "PATH", num_args = 1.., required = true)]
    pub input: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Overrides the generator seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct StageArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub inputs: InputArgs,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub inputs: InputArgs,
    #[arg(long, value_enum, default_value = "off")]
    pub weights: Switch,
    #[arg(long, value_enum, default_value = "all")]
    pub model: ModelChoice,
    /// Gauss-Hermite nodes; overrides the configuration.
    #[arg(long)]
    pub nodes: Option<usize>,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub inputs: InputArgs,
    #[arg(long, value_enum, default_value = "off")]
    pub weights: Switch,
}

#[derive(Debug, Args)]
pub struct MonteCarloArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the configured weighting.
    #[arg(long, value_enum)]
    pub weights: Option<Switch>,
    #[arg(long)]
    pub nodes: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic panel with spells and truth tables.
    Simulate(SimulateArgs),
    /// Compute entitlements and apply the selection cascade.
    Select(StageArgs),
    /// Build estimation rows for the selected sample.
    Covariates(StageArgs),
    /// Fit the take-up models.
    Estimate(EstimateArgs),
    /// Non-take-up rates and descriptive tables.
    Metrics(MetricsArgs),
    /// Repeated generation and estimation against the known truth.
    Montecarlo(MonteCarloArgs),
    /// Assemble report tables and figure data from earlier stages.
    Report(StageArgs),
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(a) => commands::simulate::run(a),
        Command::Select(a) => commands::select::run(a),
        Command::Covariates(a) => commands::covariates::run(a),
        Command::Estimate(a) => commands::estimate::run(a),
        Command::Metrics(a) => commands::metrics::run(a),
        Command::Montecarlo(a) => commands::montecarlo::run(a),
        Command::Report(a) => commands::report::run(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            let msg = first.strip_prefix("error: ").unwrap_or(first);
            eprintln!("{}", CliError::new(Kind::Usage, msg));
            return ExitCode::from(Kind::Usage.code() as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.kind.code() as u8)
        }
    }
}
