//! Command-line front end for `ctmc-envelope`.

pub mod args;
pub mod commands;
pub mod config;
pub mod csv;

use anyhow::Result;

use args::{Cli, Command, ExperimentArgs};
use config::{load_config_file, ExperimentConfig, MatrixSpec};

pub fn resolve_config(args: &ExperimentArgs) -> Result<ExperimentConfig> {
    let file = match &args.config {
        Some(path) => Some(load_config_file(path)?),
        None => None,
    };
    ExperimentConfig::resolve(file.as_ref(), &args.overrides())
}

/// Runs a parsed command line and returns the process exit status.
pub fn run(cli: Cli) -> Result<i32> {
    let status = match cli.command {
        Command::Validate(a) => !commands::cmd_validate(&resolve_config(&a)?)? as i32,
        Command::Price(a) => {
            commands::cmd_price(&resolve_config(&a)?)?;
            0
        }
        Command::Compare(a) => !commands::cmd_compare(&resolve_config(&a)?)? as i32,
        Command::Expm(a) => {
            let req = commands::ExpmRequest {
                matrix: MatrixSpec::parse(&a.matrix)?,
                d: a.d,
                delta: a.delta,
                t: a.t,
                k: a.k,
                out: a.out,
            };
            commands::cmd_expm(&req)?;
            0
        }
    };
    Ok(status)
}
