mod commands;
mod config;

use std::process::ExitCode;

use clap::Parser;
use trotterlab_core::Error;

use crate::config::Cli;

/// Outcome classes, each with its own exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Capacity(String),
    /// A numerical check ran and did not pass.
    Check(String),
    Other(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 64,
            Failure::Capacity(_) => 65,
            Failure::Check(_) => 2,
            Failure::Other(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Capacity(m) | Failure::Check(m) | Failure::Other(m) => m,
        }
    }
}

/// Maps library errors onto exit classes.
pub fn classify(e: Error) -> Failure {
    match e {
        Error::Argument(_) | Error::Domain(_) | Error::Partition(_) => Failure::Usage(e.to_string()),
        Error::Capacity(_) => Failure::Capacity(e.to_string()),
        Error::Numeric(_) | Error::InternalConsistency(_) => Failure::Check(e.to_string()),
        Error::Dimension(_) => Failure::Other(e.to_string()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(64) } else { ExitCode::SUCCESS };
        }
    };
    match config::resolve(&cli).and_then(commands::run) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
