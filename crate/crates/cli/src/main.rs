//! `esurf`: geodesics, distances and means of spherically parametrized
//! surfaces from the command line.
//!
//! Exit status: `0` on success, `2` for invalid input or settings, `3` when
//! an optimization stopped before converging (outputs are still written) and
//! `4` for file system errors.

mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use elastic_surfaces::Error;

/// Exit statuses.
pub const EXIT_OK: u8 = 0;
pub const EXIT_INVALID: u8 = 2;
pub const EXIT_NOT_CONVERGED: u8 = 3;
pub const EXIT_IO: u8 = 4;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } => EXIT_IO,
        _ => EXIT_INVALID,
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.verbose);
    let outcome = match &cli.command {
        Command::Geodesic(a) => commands::geodesic(a),
        Command::Distance(a) => commands::distance(a),
        Command::Mean(a) => commands::mean(a),
        Command::SrnfCompare(a) => commands::srnf_compare(a),
        Command::BoundCheck(a) => commands::bound_check(a),
        Command::Synth(a) => commands::synth(a),
    };
    match outcome {
        Ok(true) => ExitCode::from(EXIT_OK),
        Ok(false) => {
            eprintln!("esurf: warning: optimization did not converge");
            ExitCode::from(EXIT_NOT_CONVERGED)
        }
        Err(e) => {
            eprintln!("esurf: error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
