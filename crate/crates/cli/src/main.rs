mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;
use serde_json::json;

use crate::args::Cli;

pub enum CliError {
    Usage(String),
    Domain(noiseamp::Error),
    Io(std::io::Error),
}

impl From<noiseamp::Error> for CliError {
    fn from(e: noiseamp::Error) -> Self {
        CliError::Domain(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

fn fail(kind: &str, message: String, code: u8) -> ExitCode {
    eprintln!("{}", json!({"error": kind, "message": message}));
    ExitCode::from(code)
}

/// `NOISEAMP_THREADS` caps the worker pool; 0 or unset means automatic.
fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("NOISEAMP_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .map_err(|_| format!("NOISEAMP_THREADS must be a non-negative integer, got {raw:?}"))?;
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(msg) = configure_threads() {
        return fail("Usage", msg, 2);
    }
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => fail("Usage", msg, 2),
        Err(CliError::Domain(e)) => fail(e.kind(), e.to_string(), 3),
        Err(CliError::Io(e)) => fail("Io", e.to_string(), 1),
    }
}
