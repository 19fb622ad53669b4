//! `abrule` command-line front end.

mod commands;
mod config;
mod exit;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use crate::commands::ScanArgs;
use crate::config::{BackWall, LoadedConfig};

/// Worker-count override for the parallel sweeps.
const THREADS_ENV: &str = "ABRULE_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "abrule",
    version,
    about = "Detection-time statistics under the absorbing boundary rule"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evolve the configured packet and write its detection-time distribution.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides [output].dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate R_k and A_k, optionally against narrowband simulations.
    ReflectionScan {
        #[arg(long)]
        kappa: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        nu: f64,
        /// Smallest k/kappa on the grid.
        #[arg(long, default_value_t = 0.05)]
        k_min: f64,
        /// Largest k/kappa on the grid.
        #[arg(long, default_value_t = 5.0)]
        k_max: f64,
        #[arg(long, default_value_t = 0.05)]
        k_step: f64,
        /// Also simulate packets at the `--numeric-k` ratios.
        #[arg(long)]
        numeric: bool,
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.5, 1.0, 2.0])]
        numeric_k: Vec<f64>,
        #[arg(long, default_value_t = 0.02)]
        dx: f64,
        #[arg(long, default_value_t = 1.0)]
        hbar: f64,
        #[arg(long, default_value_t = 1.0)]
        mass: f64,
        /// Add the reflection of a Neumann-backed shell of this width.
        #[arg(long)]
        soft_width: Option<f64>,
        #[arg(long)]
        soft_strength: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Drive a soft shell towards the hard detector and report the verdict.
    SoftLimit {
        #[arg(long)]
        config: PathBuf,
        /// neumann, dirichlet or robin:<c>
        #[arg(long)]
        back_wall: Option<BackWall>,
        #[arg(long)]
        sweep_len: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bohmian exit statistics of an |psi0|^2-sampled ensemble.
    Trajectories {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the A_k versus k/kappa curve.
    Figure1 {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .parse()
            .map_err(|_| exit::ConfigError(format!("{THREADS_ENV} must be a positive integer")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<u8> {
    configure_threads()?;
    match cli.command {
        Command::Simulate { config, out } => {
            commands::simulate(&LoadedConfig::load(&config)?, out.as_deref())
        }
        Command::ReflectionScan {
            kappa,
            nu,
            k_min,
            k_max,
            k_step,
            numeric,
            numeric_k,
            dx,
            hbar,
            mass,
            soft_width,
            soft_strength,
            out,
        } => commands::reflection_scan_cmd(
            &ScanArgs {
                kappa,
                nu,
                k_min,
                k_max,
                k_step,
                numeric,
                numeric_k,
                dx,
                hbar,
                mass,
                soft_width,
                soft_strength,
            },
            out.as_deref(),
        ),
        Command::SoftLimit {
            config,
            back_wall,
            sweep_len,
            out,
        } => commands::soft_limit(
            &LoadedConfig::load(&config)?,
            back_wall.map(|b| b.0),
            sweep_len,
            out.as_deref(),
        ),
        Command::Trajectories {
            config,
            n,
            seed,
            out,
        } => commands::trajectories(&LoadedConfig::load(&config)?, n, seed, out.as_deref()),
        Command::Figure1 { out } => commands::figure1(out.as_deref()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit::code_for(&e))
        }
    }
}
