use std::process::ExitCode;

use clap::Parser;
use odm_harness::cli::{run, Cli};

fn main() -> ExitCode {
    ExitCode::from(run(Cli::parse()))
}
