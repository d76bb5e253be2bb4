//! `wpt`: electrical parameters, mutual inductances, power profiles and
//! transmitter placement for distributed MISO wireless power transfer.

mod commands;
mod config;
mod error;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use wpt_core::magnetics::MutualMode;

use config::{PlacementSection, ScenarioConfig};
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "wpt", version, about)]
struct Cli {
    /// Scenario file (TOML). Without one, the reference system is used.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides solver.seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Mutual inductance model; overrides the config.
    #[arg(long, global = true, value_parser = parse_mode)]
    mode: Option<MutualMode>,
    /// Output directory for profile.csv, metrics.json and report.json.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Derived resistance, inductance and compensator capacitance of both coils.
    Params,
    /// Transmitter-receiver mutual inductance at the given lateral distances (m).
    Mutual {
        #[arg(long = "distance", required = true, num_args = 1..)]
        distances: Vec<f64>,
    },
    /// Load-power profile over the region for a fixed placement.
    Profile,
    /// Optimize the placement, then write its profile and a run report.
    Place,
    /// Rotationally symmetric ring structures for N transmitters on a disk.
    Structures {
        /// Defaults to placement.transmitters from the config.
        #[arg(long)]
        transmitters: Option<usize>,
    },
}

fn parse_mode(s: &str) -> Result<MutualMode, String> {
    s.parse().map_err(|e: wpt_core::Error| e.to_string())
}

fn print_json<T: Serialize>(value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Numeric(e.to_string()))?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "{text}").map_err(|e| CliError::Io(format!("stdout: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(k) = cli.threads {
        if k == 0 {
            return Err(CliError::Validation("threads: must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| CliError::Validation(format!("threads: {e}")))?;
    }
    let mut cfg = match &cli.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.solver.seed = seed;
    }
    if let Some(mode) = cli.mode {
        cfg.mode = mode;
    }
    match cli.command {
        Command::Params => print_json(&commands::params(&cfg)?),
        Command::Mutual { distances } => print_json(&commands::mutual(&cfg, &distances)?),
        Command::Profile => {
            let report = commands::profile(&cfg, &cli.out)?;
            print_json(&report.results.metrics)
        }
        Command::Place => {
            let report = commands::place(&cfg, &cli.out)?;
            print_json(&report.results.metrics)
        }
        Command::Structures { transmitters } => {
            let n = match (transmitters, &cfg.placement) {
                (Some(n), _) => n,
                (None, Some(PlacementSection::Optimize { transmitters } | PlacementSection::Uniform { transmitters })) => {
                    *transmitters
                }
                _ => {
                    return Err(CliError::Validation(
                        "transmitters: pass --transmitters or set placement.transmitters".into(),
                    ))
                }
            };
            print_json(&commands::structures(n)?)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("wpt: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
