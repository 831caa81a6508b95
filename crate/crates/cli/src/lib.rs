//! The `junta` command-line tool: instance generation, algorithm trials and
//! exact audits, reported as versioned CSV.

pub mod commands;
pub mod error;
pub mod instances;
pub mod options;
pub mod output;

use clap::Parser;
use std::ffi::OsString;

/// Parse arguments and run; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match options::Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match commands::dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("junta: {e}");
            e.exit_code()
        }
    }
}
