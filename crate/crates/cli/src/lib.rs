//! Front end for the `ddtf` binary.
//!
//! Every subcommand returns an exit code instead of exiting, so the same
//! entry point serves the binary and the integration tests: `0` on success,
//! `1` when the pipeline fails at runtime, `2` for bad flags or configs.

use std::ffi::OsString;

use clap::Parser;

pub mod args;
pub mod bench;
pub mod commands;
mod output;

pub use args::{Cli, Command};
pub use bench::{BenchConfig, BenchRow, MethodSpec};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] ddtf_core::Error),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

/// Parses `argv` (program name first) and runs the chosen subcommand.
pub fn run<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match &cli.command {
        Command::Denoise(a) => commands::cmd_denoise(a),
        Command::SynthNoise(a) => commands::cmd_synth_noise(a),
        Command::Bench(a) => bench::cmd_bench(a),
        Command::Spectrum(a) => commands::cmd_spectrum(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
