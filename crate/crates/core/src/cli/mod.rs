//! Campaign runner support: benchmark corpus, stats streams, summaries,
//! witness files and multi-seed sweeps.

pub mod bench;
pub mod stats;
pub mod summary;
pub mod sweep;
pub mod witness;

use std::io;
use std::path::{Path, PathBuf};

use crate::minivm::{parse_contract, Contract, DeployError, ParseError};

/// Process exit codes used by the command-line tool.
pub mod exit {
    pub const OK: u8 = 0;
    pub const IO: u8 = 1;
    /// Used by the argument parser for invalid flags.
    pub const USAGE: u8 = 2;
    pub const PARSE: u8 = 3;
    pub const DEPLOY: u8 = 4;
    pub const NOT_REPRODUCED: u8 = 5;
    pub const VERSION: u8 = 6;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{0}")]
    Usage(String),
    #[error("parse error: {0}")]
    Parse(#[from] ParseError),
    #[error("deploy failed: {0}")]
    Deploy(#[from] DeployError),
    #[error("invalid witness: {0}")]
    Witness(String),
    #[error("witness written by version {found}, this is {expected}")]
    VersionMismatch { found: String, expected: String },
}

impl CliError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.to_owned(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } => exit::IO,
            CliError::Usage(_) => exit::USAGE,
            CliError::Parse(_) => exit::PARSE,
            CliError::Deploy(_) => exit::DEPLOY,
            CliError::Witness(_) => exit::PARSE,
            CliError::VersionMismatch { .. } => exit::VERSION,
        }
    }
}

/// Reads a contract from a file, or from the built-in corpus when the
/// argument has the form `builtin:NAME`. Returns the source and the parse.
pub fn load_contract(arg: &str) -> Result<(String, Contract), CliError> {
    let source = match arg.strip_prefix("builtin:") {
        Some(name) => bench::builtin(name).ok_or_else(|| {
            CliError::Usage(format!(
                "unknown built-in contract {name:?}; available: {}",
                bench::builtin_names().join(", ")
            ))
        })?,
        None => std::fs::read_to_string(arg).map_err(|e| CliError::io(Path::new(arg), e))?,
    };
    let contract = parse_contract(&source)?;
    Ok((source, contract))
}
