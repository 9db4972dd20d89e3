//! `molmimo`: run channel simulations, fits, BER and SIR sweeps, threshold
//! tables and the text demo from one TOML experiment file.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::ExperimentConfig;
use error::CliError;

#[derive(Parser)]
#[command(name = "molmimo", version, about = "Molecular 2x2 MIMO link experiments")]
struct Cli {
    /// Experiment file; omitted fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Overrides the config output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Full-size runs: 500 simulation replications, 5e5 bits x 20 per BER point.
    #[arg(long = "paper-scale", global = true)]
    full_scale: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Particle simulation of the four hitting CDFs.
    SimulateChannel,
    /// Fit the channel model to simulated or stored CDFs.
    Fit {
        /// `channel_cdf.csv` from simulate-channel.
        #[arg(long)]
        cdf: Option<PathBuf>,
    },
    /// Monte Carlo BER of every configured detector.
    BerSweep,
    /// Signal-to-interference ratio over a topology grid.
    SirSweep,
    /// Detection thresholds and the zero-forcing crossover point.
    ThresholdTable,
    /// Send text through the emulated link and decode it.
    ProtocolDemo {
        #[arg(long)]
        text: Option<String>,
    },
    /// Print the effective configuration as TOML.
    ShowConfig,
}

fn load(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            ExperimentConfig::from_toml(&text)?
        }
        None => ExperimentConfig::default(),
    };
    if cli.full_scale {
        cfg = cfg.full_scale();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Config("--jobs must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let cfg = load(&cli)?;
    match &cli.command {
        Command::SimulateChannel => commands::simulate_channel(&cfg),
        Command::Fit { cdf } => commands::fit(&cfg, cdf.as_deref()),
        Command::BerSweep => commands::ber_sweep(&cfg),
        Command::SirSweep => commands::sir_sweep(&cfg),
        Command::ThresholdTable => commands::threshold_table(&cfg),
        Command::ProtocolDemo { text } => commands::protocol_demo(&cfg, text.as_deref()),
        Command::ShowConfig => {
            print!("{}", cfg.to_toml());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
