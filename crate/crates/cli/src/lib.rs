//! Command-line front end: equilibrium census, wave construction, parameter
//! sweeps, PDE validation runs and wall sampling.
//!
//! [`run`] is the whole program; `main` only forwards process arguments and
//! the exit code.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use thiserror::Error;

pub mod config;
pub mod equilibria;
pub mod orbit_io;
pub mod output;
pub mod pde;
pub mod sweep;
pub mod wall;
pub mod wave;

pub use config::{ConfigFile, ParamArgs};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const IO: i32 = 1;
    pub const INVALID: i32 = 2;
    pub const SOLVER: i32 = 3;
    pub const NO_ORBIT: i32 = 4;
    pub const SIMULATION: i32 = 5;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("no orbit found: {0}")]
    NoOrbit(String),
    #[error("simulation failure: {0}")]
    Simulation(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => exit::INVALID,
            CliError::Solver(_) => exit::SOLVER,
            CliError::NoOrbit(_) => exit::NO_ORBIT,
            CliError::Simulation(_) => exit::SIMULATION,
            CliError::Io { .. } => exit::IO,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "woundwave",
    version,
    about = "Travelling waves of a wound-healing angiogenesis model"
)]
pub struct Cli {
    /// Key-value configuration file (TOML). Flags override file values; a
    /// `[<command>]` table overrides top-level keys for that command.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Equilibria, canard points and bifurcation speeds as JSON.
    Equilibria(equilibria::EquilibriaArgs),
    /// Construct singular travelling waves.
    Wave(wave::WaveArgs),
    /// Region labels over an (alpha, c) grid at fixed beta.
    Sweep(sweep::SweepArgs),
    /// Simulate the diffusive system from a constructed wave.
    Pde(pde::PdeArgs),
    /// Sample the wall of singularities.
    Wall(wall::WallArgs),
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::INVALID } else { exit::OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    match dispatch(cli, out, err) {
        Ok(()) => exit::OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.code()
        }
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => Some(ConfigFile::load(path)?),
        None => None,
    };
    let file = file.as_ref();
    match cli.command {
        Command::Equilibria(a) => equilibria::run(&config::merge(&a, file, "equilibria")?, out),
        Command::Wave(a) => wave::run(&config::merge(&a, file, "wave")?, out),
        Command::Sweep(a) => sweep::run(&config::merge(&a, file, "sweep")?, out, err),
        Command::Pde(a) => pde::run(&config::merge(&a, file, "pde")?, out, err),
        Command::Wall(a) => wall::run(&config::merge(&a, file, "wall")?, out),
    }
}
