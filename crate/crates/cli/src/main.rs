use std::process::ExitCode;

use clap::Parser;
use fcmrisk::args::Cli;

fn main() -> ExitCode {
    ExitCode::from(fcmrisk::run(&Cli::parse()))
}
