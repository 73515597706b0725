use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gcilsm_sim::output::write_outputs;
use gcilsm_sim::{run_experiment, Error, MethodSelection, Preset, ScenarioConfig};
use log::info;

#[derive(Parser)]
#[command(
    name = "gcilsm",
    version,
    about = "Distributed multi-sensor tracking simulator with label-space matched GCI fusion"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte-Carlo experiment and write per-method CSV tables.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the configured seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the configured number of runs.
        #[arg(long)]
        runs: Option<u32>,
        #[arg(long, default_value = "all", value_parser = parse_method)]
        method: MethodSelection,
    },
    /// Check a config file without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Write a bundled scenario file.
    Preset {
        #[arg(value_parser = parse_preset)]
        name: Preset,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_method(s: &str) -> Result<MethodSelection, String> {
    s.parse()
}

fn parse_preset(s: &str) -> Result<Preset, String> {
    s.parse()
}

fn load(path: &Path) -> Result<ScenarioConfig, Error> {
    let config = ScenarioConfig::load(path)?;
    config.validate()?;
    Ok(config)
}

fn execute(command: Command) -> Result<(), Error> {
    match command {
        Command::Run {
            config,
            out,
            seed,
            runs,
            method,
        } => {
            let mut config = load(&config)?;
            if let Some(seed) = seed {
                config.seed = seed;
            }
            if let Some(runs) = runs {
                config.mc_runs = runs;
            }
            config.validate()?;
            info!("running {} Monte-Carlo runs", config.mc_runs);
            let result = run_experiment(&config, method)?;
            for path in write_outputs(&out, &config, &result)? {
                println!("{}", path.display());
            }
        }
        Command::Validate { config } => {
            load(&config)?;
            println!("{}: ok", config.display());
        }
        Command::Preset { name, out } => {
            std::fs::write(&out, name.toml())?;
            println!("{}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
