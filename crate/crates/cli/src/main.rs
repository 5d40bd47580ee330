use std::io::{self, BufWriter};
use std::process::ExitCode;

use andreev_cli::Cli;
use clap::Parser;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let code = andreev_cli::run(&cli, &mut out, &mut io::stderr());
    ExitCode::from(code)
}
