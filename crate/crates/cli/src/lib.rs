//! Scenario runner behind the `isps` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod svg;

use isps_core::Error;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    Core(#[from] Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    /// `report` is the full certificate listing, `failed` names the checks.
    #[error("verification failed: {failed}")]
    Verification { report: String, failed: String },
}

impl CliError {
    /// 2 for a finite escape, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(Error::FiniteEscape { .. }) => 2,
            _ => 1,
        }
    }

    /// Single-line diagnostic.
    pub fn diagnostic(&self) -> String {
        format!("error: {}", self.to_string().replace('\n', " "))
    }
}
