//! Library half of the benchmark harness; the `clbf-bench` binary is a
//! thin wrapper over these modules.

pub mod commands;
pub mod dataset_spec;
pub mod measure;
pub mod report;
pub mod stored;
pub mod svg;

use std::fmt;

/// Command errors mapped onto process exit codes:
/// 2 = parse (CLI/CSV/spec), 3 = invalid parameters, 4 = I/O or corrupt
/// file, 5 = false negative detected while benchmarking.
#[derive(Debug)]
pub enum CliError {
    Parse(String),
    Invalid(String),
    Io(String),
    FalseNegative(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Parse(m) => write!(f, "parse error: {m}"),
            CliError::Invalid(m) => write!(f, "invalid parameters: {m}"),
            CliError::Io(m) => write!(f, "io error: {m}"),
            CliError::FalseNegative(m) => write!(f, "false negative: {m}"),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Invalid(_) => 3,
            CliError::Io(_) => 4,
            CliError::FalseNegative(_) => 5,
        }
    }
}

impl From<clbf::Error> for CliError {
    fn from(e: clbf::Error) -> Self {
        match e {
            clbf::Error::Parse { .. } => CliError::Parse(e.to_string()),
            clbf::Error::InvalidParameter(_)
            | clbf::Error::DimensionMismatch { .. }
            | clbf::Error::EmptyScoreSet(_) => CliError::Invalid(e.to_string()),
            clbf::Error::Io(_) | clbf::Error::Format(_) => CliError::Io(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// `CLBF_SEED` overrides the command-line seed when set.
pub fn effective_seed(cli_seed: u64) -> u64 {
    std::env::var("CLBF_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(cli_seed)
}
