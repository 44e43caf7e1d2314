mod cli;
mod commands;
mod config;
mod logging;

use std::process::ExitCode;

use anyhow::Result;
use clap::Parser;

use cli::{Cli, COMMANDS};
use commands::{Globals, Run};
use config::{ConfigFile, UsageError};
use logging::LogFormat;

#[derive(serde::Deserialize)]
struct FileGlobals {
    seed: Option<u64>,
    log: Option<LogFormat>,
    jobs: Option<usize>,
}

fn run(cli: Cli) -> Result<bool> {
    let file = cli.config.as_deref().map(|p| ConfigFile::load(p, &COMMANDS)).transpose()?;
    let from_file: FileGlobals = match &file {
        Some(f) => serde_json::from_value(f.globals()).map_err(|e| config::usage(format!("config globals: {e}")))?,
        None => FileGlobals { seed: None, log: None, jobs: None },
    };
    logging::init(cli.log.or(from_file.log).unwrap_or(LogFormat::Text));
    let jobs = cli
        .jobs
        .or(from_file.jobs)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if jobs == 0 {
        return Err(config::usage("--jobs must be at least 1"));
    }
    let globals = Globals { seed: cli.seed.or(from_file.seed).unwrap_or(0), jobs };
    Run { globals, file: file.as_ref() }.dispatch(&cli.command)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<UsageError>() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
