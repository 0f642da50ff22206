//! otkit command-line front end.
//!
//! Exit codes: 0 on success, 1 for usage errors, 2 for unreadable or
//! malformed inputs and unwritable outputs, 3 for solver errors.

pub mod args;
pub mod commands;
pub mod error;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

pub use args::{Cli, Command};
pub use commands::{compare, epsilon_curve, iterations_monotone, solve, CompareReport, CurvePoint, Grid, Ranked, Summary};
pub use error::{CliError, CliResult};

/// Runs one subcommand and returns the paths it wrote.
pub fn execute(cli: &Cli) -> CliResult<Vec<PathBuf>> {
    match &cli.command {
        Command::Generate(args) => commands::generate_cmd(args),
        Command::Run(args) => commands::run_cmd(args),
        Command::Curve(args) => commands::curve_cmd(args),
        Command::Compare(args) => commands::compare_cmd(args),
        Command::Otw(args) => commands::otw_cmd(args),
        Command::Barycenter(args) => commands::barycenter_cmd(args),
    }
}

/// Parses `args`, runs the subcommand and maps failures to exit codes.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            // help and version requests are not errors
            return if err.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(&cli) {
        Ok(paths) => {
            for path in paths {
                println!("wrote {}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("otkit: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
