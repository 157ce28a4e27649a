//! Command-line front end: keyed detection over CSV/NDJSON input, the
//! benchmark grid, and synthetic data generation.

pub mod bench;
pub mod config;
pub mod gen;
pub mod input;
pub mod runtime;

use clap::{Parser, Subcommand};
use streamcpd::CpdError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags, config file or input layout. Exit code 2.
    #[error("configuration error: {0}")]
    Config(String),
    /// Anything that goes wrong while running. Exit code 1.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        Self::Config(msg.into())
    }

    pub fn runtime(msg: impl Into<String>) -> Self {
        Self::Runtime(msg.into())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) => 2,
            Self::Runtime(_) => 1,
        }
    }
}

impl From<CpdError> for CliError {
    fn from(e: CpdError) -> Self {
        match e {
            CpdError::Config(msg) => Self::Config(msg),
            other => Self::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Runtime(format!("I/O error: {e}"))
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Parser)]
#[command(name = "streamcpd", version, about = "Streaming Bayesian changepoint detection")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

// Parsed once per process; the size difference does not matter.
#[allow(clippy::large_enum_variant)]
#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a detector per key over a CSV or NDJSON stream.
    Detect(config::DetectArgs),
    /// Run the generator x algorithm grid and write a CSV report.
    Bench(bench::BenchArgs),
    /// Write a synthetic stream and its changepoint indices.
    Gen(gen::GenArgs),
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Detect(args) => {
            let cfg = config::RunConfig::resolve(args)?;
            runtime::detect(&cfg).map(|_| ())
        }
        Command::Bench(args) => bench::run(&args),
        Command::Gen(args) => gen::run(&args),
    }
}
