//! Batch front-end for `ttl-core`: job files, catalog forms, seeded random
//! test functions and JSON reports.

pub mod catalog;
pub mod config;
pub mod random;
pub mod suites;
pub mod wire;

pub use config::{Command, JobConfig};
pub use suites::{run_job, Case, Report, Status};

#[derive(Debug, thiserror::Error)]
pub enum TtlError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] ttl_core::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl TtlError {
    /// Process exit code when the job cannot produce a report.
    pub fn exit_code(&self) -> i32 {
        match self {
            TtlError::Core(ttl_core::Error::NonStabilizing(_)) => 2,
            _ => 3,
        }
    }
}
