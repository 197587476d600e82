//! Batch front end: configuration ingestion and subcommands for audits,
//! flows, section sweeps, and closed-form comparisons. Deterministic,
//! machine-readable outputs.
//!
//! Exit codes: 0 ok, 1 usage/config error, 2 audit/verification failure,
//! 3 numerical failure.

mod commands;
mod config;
mod output;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use config::RunConfig;
use output::OutputDir;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Verification(String),
    Numerical(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Verification(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Verification(m) | CliError::Numerical(m) => m,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "birkhoff",
    about = "Global hypersurfaces of section for geodesic flows on convex hypersurfaces",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// JSON run configuration
    #[arg(long)]
    config: String,
    /// Dotted-path scalar overrides, e.g. --set integrator.base_step=1e-4
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory (overrides output.directory)
    #[arg(long)]
    out: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Audit symmetry, definiteness, curvature, and the angular bound
    Audit(CommonArgs),
    /// Estimate the angular lower bound epsilon
    Epsilon(CommonArgs),
    /// Integrate one trajectory and dump it as CSV
    Flow(CommonArgs),
    /// Sweep seeded page starts through the first-return map
    Section {
        #[command(flatten)]
        common: CommonArgs,
        /// Sweep even when the audits fail
        #[arg(long)]
        force: bool,
    },
    /// Compare numeric returns against the closed-form return map
    Compare(CommonArgs),
}

fn load(common: &CommonArgs) -> Result<(RunConfig, OutputDir), CliError> {
    let mut config = RunConfig::load(&common.config, &common.set)?;
    if let Some(dir) = &common.out {
        config.output.directory = dir.clone();
    }
    let out = OutputDir::create(&config.output.directory, config.resolved_json())?;
    Ok((config, out))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Audit(common) => {
            let (config, out) = load(common)?;
            commands::cmd_audit(&config, &out)
        }
        Command::Epsilon(common) => {
            let (config, out) = load(common)?;
            commands::cmd_epsilon(&config, &out)
        }
        Command::Flow(common) => {
            let (config, out) = load(common)?;
            commands::cmd_flow(&config, &out)
        }
        Command::Section { common, force } => {
            let (config, out) = load(common)?;
            commands::cmd_section(&config, &out, *force)
        }
        Command::Compare(common) => {
            let (config, out) = load(common)?;
            commands::cmd_compare(&config, &out)
        }
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                std::process::exit(0);
            }
            eprintln!("{e}");
            std::process::exit(1);
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("error: {}", e.message());
        std::process::exit(e.exit_code());
    }
}
