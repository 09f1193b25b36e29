//! `sdr-bench`: synthetic benchmarks, γ sweeps, real-data curves and the
//! oracle self-check. Exit codes: 0 success, 1 oracle or internal failure,
//! 2 usage or configuration error.

pub mod cli;
pub mod commands;
pub mod oracles;

use std::ffi::OsString;
use std::fmt;
use std::panic::{catch_unwind, AssertUnwindSafe};

use clap::Parser;
use sdr_core::SdrError;

use crate::cli::{Cli, Command};

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Oracle(Vec<String>),
    Internal(String),
}

impl Failure {
    pub fn usage(msg: impl Into<String>) -> Self {
        Failure::Usage(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Oracle(_) | Failure::Internal(_) => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "{m}"),
            Failure::Oracle(names) => write!(f, "oracle failures: {}", names.join(", ")),
            Failure::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl From<SdrError> for Failure {
    fn from(e: SdrError) -> Self {
        match e {
            SdrError::Contract(_) | SdrError::MissingColumn(_) | SdrError::Ingest { .. } | SdrError::Io(_) | SdrError::Csv(_) => {
                Failure::Usage(e.to_string())
            }
            other => Failure::Internal(other.to_string()),
        }
    }
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// process exit code. Panics are caught and reported as internal failures.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = catch_unwind(AssertUnwindSafe(|| match &cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::SweepGamma(a) => commands::sweep_gamma(a),
        Command::RealData(a) => commands::real_data(a),
        Command::OracleCheck(a) => commands::oracle_check(a),
    }));
    match result {
        Ok(Ok(())) => 0,
        Ok(Err(f)) => {
            eprintln!("error: {f}");
            f.exit_code()
        }
        Err(_) => {
            eprintln!("error: internal failure (panic)");
            1
        }
    }
}
