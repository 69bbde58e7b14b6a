//! Harness layer for the `gridfuse` binary: configuration presets, scene
//! synthesis, and the end-to-end pipeline runner.
//!
//! Failures carry the exit-code class the binary reports: 2 for
//! configuration problems, 3 for missing or malformed inputs, 4 for
//! numerical failures (non-finite data, gradient checks above tolerance).

use std::fmt;

pub mod config;
pub mod pipeline;
pub mod scene;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Input(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Input(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Input(msg) => write!(f, "input error: {msg}"),
            CliError::Numerical(msg) => write!(f, "numerical error: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<gridfuse::Error> for CliError {
    fn from(e: gridfuse::Error) -> Self {
        match e {
            gridfuse::Error::NonFinite(_) => CliError::Numerical(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}
