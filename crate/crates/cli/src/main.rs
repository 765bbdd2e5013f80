use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cldyn_cli::config::{parse_config, Format, Mode, Overrides, SweepMode};
use cldyn_core::Execution;

#[derive(Parser)]
#[command(name = "cldyn", version, about = "Mean-field dynamics of contrastive learning: simulations, ODEs, PDEs and phase portraits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// TOML or JSON experiment file.
    #[arg(long)]
    config: PathBuf,
    /// Seed for a run; repeat for an ensemble.
    #[arg(long = "seed")]
    seeds: Vec<u64>,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<String>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Run everything on the calling thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Online SGD ensemble.
    Simulate(Common),
    /// Order-parameter ODE.
    Ode(Common),
    /// Weight-density PDE.
    Pde(Common),
    /// Fixed points and their stability.
    FixedPoints(Common),
    /// Basins of attraction for two features.
    Basins(Common),
    /// Recovery state against augmentation-noise strength.
    NoiseSweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        mode: Option<SweepMode>,
    },
    /// SGD ensemble against the ODE on the same parameters.
    Compare(Common),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let (mode, common, sweep_mode) = match cli.command {
        Command::Simulate(c) => (Mode::Simulate, c, None),
        Command::Ode(c) => (Mode::Ode, c, None),
        Command::Pde(c) => (Mode::Pde, c, None),
        Command::FixedPoints(c) => (Mode::FixedPoints, c, None),
        Command::Basins(c) => (Mode::Basins, c, None),
        Command::NoiseSweep { common, mode } => (Mode::NoiseSweep, common, mode),
        Command::Compare(c) => (Mode::Compare, c, None),
    };
    let overrides = Overrides {
        mode: Some(mode),
        seeds: common.seeds,
        out: common.out,
        format: common.format,
        sweep_mode,
    };
    let cfg = match parse_config(&common.config, &overrides) {
        Ok(cfg) => cfg,
        Err(e) => {
            log::error!("{e}");
            return ExitCode::from(1);
        }
    };
    let exec = if common.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    match cldyn_cli::execute(&cfg, exec) {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
