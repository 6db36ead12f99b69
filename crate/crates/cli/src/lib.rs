//! Command-line front end: sheaf spec and assignment file formats plus the `sheafctl`
//! subcommands.

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use sheaf_core::scenarios::ObstacleParams;

pub mod assignment_io;
pub mod commands;
pub mod error;
pub mod parallel;
pub mod scenario;
pub mod spec;

pub use error::{CliError, CliResult, EXIT_ANALYSIS, EXIT_INPUT, EXIT_NOT_CONVERGED};

use commands::{FuseSettings, LiftSettings, DEFAULT_CHECK_SAMPLES};

/// Sensor integration with sheaves over finite topologies.
#[derive(Debug, Parser)]
#[command(name = "sheafctl", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Built-in scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScenarioName {
    /// Search and rescue: eight sensors locating a crashed aircraft.
    Sar,
    /// Pixel mosaic around an obstacle.
    Obstacle,
    /// Two camera views of a pile of coins.
    Coins,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Verify the topology, functoriality and gluing axioms of a spec.
    Check {
        spec: PathBuf,
        /// Random points per pair of opens with several restriction paths.
        #[arg(long, default_value_t = DEFAULT_CHECK_SAMPLES)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Consistency radius of an assignment.
    Radius {
        spec: PathBuf,
        assignment: PathBuf,
        /// Write the edge table as CSV.
        #[arg(long)]
        edges_out: Option<PathBuf>,
    },
    /// Nearest global section to an assignment.
    Fuse {
        spec: PathBuf,
        assignment: PathBuf,
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        restarts: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Lipschitz constant for the reported lower bound.
        #[arg(long)]
        lipschitz: Option<f64>,
        /// Exit with status 3 when the optimizer runs out of iterations.
        #[arg(long)]
        strict: bool,
        /// Write the fused assignment as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Čech cohomology of a linear sheaf on a cover.
    Cohomology {
        spec: PathBuf,
        /// Cover members as open keys (entity names joined by `+`); defaults to the subbase.
        #[arg(long, num_args = 1..)]
        cover: Vec<String>,
        #[arg(long, default_value_t = 1)]
        max_degree: usize,
        /// Use the stochastic lift with this many bins per continuous coordinate.
        #[arg(long)]
        lift_bins: Option<usize>,
        /// Sample points per coordinate and bin in the lift.
        #[arg(long, default_value_t = 1, requires = "lift_bins")]
        lift_samples: usize,
    },
    /// Check whether a cover is Leray.
    Leray {
        spec: PathBuf,
        #[arg(long, num_args = 1..)]
        cover: Vec<String>,
        #[arg(long, default_value_t = 2)]
        max_degree: usize,
    },
    /// Run a built-in scenario against its published expectations.
    Scenario {
        name: ScenarioName,
        /// Search-and-rescue case.
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=3))]
        case: u8,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory receiving the scenario's spec and assignment files.
        #[arg(long)]
        export: Option<PathBuf>,
    },
}

fn dispatch(command: &Command, out: &mut dyn Write) -> CliResult<u8> {
    match command {
        Command::Check { spec, samples, seed } => commands::check(spec, *samples, *seed, out),
        Command::Radius { spec, assignment, edges_out } => {
            commands::radius(spec, assignment, edges_out.as_deref(), out)
        }
        Command::Fuse { spec, assignment, max_iter, tol, restarts, seed, lipschitz, strict, out: fused } => {
            let settings = FuseSettings { max_iter: *max_iter, tol: *tol, restarts: *restarts, seed: *seed };
            commands::fuse(spec, assignment, &settings, *lipschitz, *strict, fused.as_deref(), out)
        }
        Command::Cohomology { spec, cover, max_degree, lift_bins, lift_samples } => {
            let lift = lift_bins.map(|bins| LiftSettings { bins, samples: *lift_samples });
            commands::cohomology(spec, cover, *max_degree, lift, out)
        }
        Command::Leray { spec, cover, max_degree } => commands::leray(spec, cover, *max_degree, out),
        Command::Scenario { name, case, seed, export } => {
            if let Some(dir) = export {
                std::fs::create_dir_all(dir).map_err(|source| CliError::Write { path: dir.clone(), source })?;
            }
            let export = export.as_deref();
            match name {
                ScenarioName::Sar => {
                    let settings = FuseSettings { seed: *seed, ..FuseSettings::default() };
                    scenario::run_sar(*case, &settings, export, out)
                }
                ScenarioName::Obstacle => scenario::run_obstacle(ObstacleParams::default(), export, out),
                ScenarioName::Coins => scenario::run_coins(export, out),
            }
        }
    }
}

/// Runs a parsed command line, printing errors to `err`, and returns the exit status.
pub fn run(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    match dispatch(&cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = out.flush();
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
