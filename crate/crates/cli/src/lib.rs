//! Command-line front end and HTTP service for the risk engine.
//!
//! `main` only parses arguments and calls [`run`]; every command is a plain
//! function in [`commands`] so tests can drive it without a process.

pub mod args;
pub mod commands;
pub mod error;
pub mod report;
pub mod service;

use std::fs;

use args::{Cli, Command};
use commands::Outcome;
use error::CliError;

fn dispatch(cli: &Cli) -> Result<(Outcome, Option<&std::path::Path>), CliError> {
    Ok(match &cli.command {
        Command::Validate(a) => (commands::validate(a)?, a.output.out.as_deref()),
        Command::Merge(a) => (commands::merge(a)?, a.output.out.as_deref()),
        Command::Evaluate(a) => (commands::evaluate(a)?, a.output.out.as_deref()),
        Command::Whatif(a) => (commands::whatif(a)?, a.run.output.out.as_deref()),
        Command::Forecast(a) => (commands::forecast(a)?, a.output.out.as_deref()),
        Command::Analyze(a) => (commands::analyze(a)?, a.run.output.out.as_deref()),
        Command::Export(a) => (commands::export(a)?, a.output.out.as_deref()),
        Command::Serve(a) => {
            let doc = commands::load_hierarchy_doc(a.hierarchy.as_deref(), a.dataset.as_deref())?;
            let state = service::AppState::new(doc, a.engine.config(), a.data_dir.clone())
                .map_err(|e| CliError::new(error::Kind::Schema, "service", e.message))?;
            let runtime = tokio::runtime::Runtime::new()
                .map_err(|e| CliError::new(error::Kind::Schema, "service", e.to_string()))?;
            runtime
                .block_on(service::serve(state, a.port))
                .map_err(|e| CliError::new(error::Kind::Schema, "service", e.to_string()))?;
            (
                Outcome {
                    output: String::new(),
                    status: 0,
                },
                None,
            )
        }
    })
}

/// Runs one command, writing its output, and returns the exit status.
pub fn run(cli: &Cli) -> u8 {
    match dispatch(cli) {
        Ok((outcome, out)) => {
            match out {
                Some(path) => {
                    if let Err(e) = fs::write(path, &outcome.output) {
                        eprintln!("{}", CliError::io(path, e));
                        return 2;
                    }
                }
                None => print!("{}", outcome.output),
            }
            outcome.status
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
