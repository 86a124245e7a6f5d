//! `qtrap <command> <config.toml>`
//!
//! Exit codes: 0 success, 1 validation failure, 2 tolerance failure,
//! 3 I/O failure. `QTRAP_WORKERS` sets the worker count.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;

use crate::config::{relative_to, Command, RunConfig};
use crate::error::CliError;

#[derive(Parser)]
#[command(name = "qtrap", version, about = "Trap currents, exponents and entropy bounds from spectral measures")]
struct Args {
    command: Command,
    config: PathBuf,
}

fn configure_workers() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("QTRAP_WORKERS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("QTRAP_WORKERS: `{raw}` is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("QTRAP_WORKERS: {e}")))
}

fn execute(command: Command, config_path: &Path) -> Result<(), CliError> {
    configure_workers()?;
    let cfg = RunConfig::load(config_path)?.resolve(command)?;
    let base = config_path.parent().unwrap_or(Path::new(""));
    let outcome = commands::run(&cfg, base)?;
    let written = output::write_all(&relative_to(base, &cfg.output), &cfg, &outcome.artifacts)?;
    for line in &outcome.summary {
        println!("{line}");
    }
    for path in &written {
        println!("wrote {}", path.display());
    }
    match outcome.tolerance_failure {
        Some(msg) => Err(CliError::Tolerance(msg)),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(args.command, &args.config) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
