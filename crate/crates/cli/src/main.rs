use clap::{Args, Parser, Subcommand};
use csqfc_cli::{run, ScenarioKind};
use std::path::PathBuf;
use std::process::ExitCode;

/// Scenario runner for the channel-selective conversion toolkit.
#[derive(Parser)]
#[command(name = "csqfc", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario config (TOML with a matching `kind`)
    #[arg(long)]
    config: PathBuf,
    /// Output directory for CSV tables and the manifest
    #[arg(long)]
    out: PathBuf,
    /// Seed override for stochastic scenarios
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Conversion efficiency vs pump power per calibrated channel
    EfficiencySweep(RunArgs),
    /// Envelope efficiency and channel count across a pump band
    BandwidthScan(RunArgs),
    /// Pump switching waveforms, edge timing, and plateau flatness
    Switching(RunArgs),
    /// Heralded-photon run: histogram and cross-correlation
    Coincidence(RunArgs),
    /// Cross-correlation matrix over a pump-channel sweep
    Matrix(RunArgs),
    /// Round assignment and switching feasibility for a demand set
    Schedule(RunArgs),
    /// Fit the efficiency law to a measured calibration table
    Fit(RunArgs),
}

impl Command {
    fn split(self) -> (ScenarioKind, RunArgs) {
        match self {
            Command::EfficiencySweep(args) => (ScenarioKind::EfficiencySweep, args),
            Command::BandwidthScan(args) => (ScenarioKind::BandwidthScan, args),
            Command::Switching(args) => (ScenarioKind::Switching, args),
            Command::Coincidence(args) => (ScenarioKind::Coincidence, args),
            Command::Matrix(args) => (ScenarioKind::Matrix, args),
            Command::Schedule(args) => (ScenarioKind::Schedule, args),
            Command::Fit(args) => (ScenarioKind::Fit, args),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = cli.command.split();
    match run(kind, &args.config, &args.out, args.seed) {
        Ok(outputs) => {
            for path in outputs {
                println!("{}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("csqfc {}: {err}", kind.as_str());
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
