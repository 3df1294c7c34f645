//! `tool`: command-line front end of the switching Levy temperature model.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;
mod validate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::RegimeTable;
use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Numerical(#[from] switching_levy::Error),
    #[error("validation failed: {0}")]
    Validation(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Validation(_) => 4,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "tool", version, about = "Switching Levy OU temperature model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML file with [model], [numerics] and [sim] sections.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` of the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct UGrid {
    #[arg(long, default_value_t = -10.0, allow_hyphen_values = true)]
    u_min: f64,
    #[arg(long, default_value_t = 10.0, allow_hyphen_values = true)]
    u_max: f64,
    #[arg(long, default_value_t = 201)]
    u_points: usize,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Densities and cdfs of the switching times, switch-count probabilities.
    Regimes {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = RegimeTable::All)]
        table: RegimeTable,
        #[arg(long, default_value_t = 8)]
        k_max: usize,
        /// End of the time grid.
        #[arg(long, default_value_t = 3.0)]
        t: f64,
        #[arg(long, default_value_t = 3001)]
        t_points: usize,
    },
    /// Characteristic function of the temperature at horizon t.
    Charfn {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.25)]
        t: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        theta: f64,
        #[command(flatten)]
        grid: UGrid,
    },
    /// Esscher parameter of the martingale measure, with the residual scan.
    Esscher {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.25)]
        t: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Monte Carlo paths and their empirical characteristic function.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.25)]
        t: f64,
        #[command(flatten)]
        grid: UGrid,
    },
    /// Oracle battery with a pass/fail report.
    Validate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.25)]
        t: f64,
        #[arg(long, default_value_t = -5.0, allow_hyphen_values = true)]
        u_min: f64,
        #[arg(long, default_value_t = 5.0, allow_hyphen_values = true)]
        u_max: f64,
        #[arg(long, default_value_t = 21)]
        u_points: usize,
    },
}

fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("TOOL_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().map_err(|_| {
        CliError::Config(format!("TOOL_THREADS = {v:?} is not a nonnegative integer"))
    })?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    Ok(())
}

fn load(common: &Common) -> Result<(RunConfig, PathBuf), CliError> {
    let cfg = RunConfig::load(&common.config)?;
    let out = common.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
    Ok((cfg, out))
}

fn run(cli: Cli) -> Result<(), CliError> {
    init_threads()?;
    match cli.command {
        Command::Regimes {
            common,
            table,
            k_max,
            t,
            t_points,
        } => {
            let (cfg, out) = load(&common)?;
            commands::regimes(&cfg, &out, table, k_max, t, t_points)
        }
        Command::Charfn {
            common,
            t,
            theta,
            grid,
        } => {
            let (cfg, out) = load(&common)?;
            let us = commands::u_grid(grid.u_min, grid.u_max, grid.u_points)?;
            commands::charfn(&cfg, &out, t, theta, &us)
        }
        Command::Esscher { common, t, tol } => {
            let (cfg, out) = load(&common)?;
            commands::esscher(&cfg, &out, t, tol)
        }
        Command::Simulate { common, t, grid } => {
            let (cfg, out) = load(&common)?;
            let us = commands::u_grid(grid.u_min, grid.u_max, grid.u_points)?;
            commands::simulate(&cfg, &out, t, &us)
        }
        Command::Validate {
            common,
            t,
            u_min,
            u_max,
            u_points,
        } => {
            let (cfg, out) = load(&common)?;
            let us = commands::u_grid(u_min, u_max, u_points)?;
            validate::validate(&cfg, &out, t, &us)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
