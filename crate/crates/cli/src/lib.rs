//! Command-line front end for polygonal Andreev billiards.
//!
//! `andreev table make` writes table files, `andreev simulate` traces an
//! orbit into CSV (and optionally SVG), and `andreev verify` runs the
//! property checks as JSON lines. Exit status: 0 pass, 1 failed check,
//! 2 configuration error, 3 singular orbit.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod render;
pub mod tablefile;

use std::io::Write;

pub use args::Cli;
pub use error::{CliError, Status};

/// Runs a parsed command line, writing results to `out` and diagnostics to
/// `err`. Returns the process exit status.
pub fn run(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    let result = match &cli.command {
        args::Command::Table {
            action: args::TableCommand::Make(a),
        } => commands::table_make(a, out),
        args::Command::Simulate(a) => commands::simulate(a, out),
        args::Command::Verify(a) => commands::verify(a, out),
    };
    let _ = out.flush();
    match result {
        Ok(status) => status.exit_code(),
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
