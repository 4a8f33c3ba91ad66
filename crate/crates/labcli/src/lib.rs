//! Config-driven experiment runner: recipes expand into (parameter point,
//! seed) jobs, run on a worker pool, and land in one `records.csv` per run.

pub mod config;
pub mod records;
pub mod recipes;
pub mod report;
pub mod runner;
pub mod specs;

use std::fmt;

/// Failure classes, each with its own process exit code.
#[derive(Debug)]
pub enum LabError {
    /// Malformed or invalid configuration, or unreadable run artifacts.
    Config(String),
    /// A requested size exceeds a hard limit of the numerical code.
    Resource(String),
    Failed(anyhow::Error),
}

impl LabError {
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config(_) => 2,
            LabError::Resource(_) => 3,
            LabError::Failed(_) => 1,
        }
    }
}

impl fmt::Display for LabError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabError::Config(m) => write!(f, "config error: {m}"),
            LabError::Resource(m) => write!(f, "resource limit: {m}"),
            LabError::Failed(e) => write!(f, "{e:#}"),
        }
    }
}

impl std::error::Error for LabError {}

impl From<anyhow::Error> for LabError {
    fn from(e: anyhow::Error) -> Self {
        LabError::Failed(e)
    }
}

/// Core errors raised while checking a configuration: size limits map to
/// the resource class, everything else to the config class.
pub fn classify(e: parity_core::Error) -> LabError {
    match e {
        parity_core::Error::DimensionTooLarge { .. } => LabError::Resource(e.to_string()),
        other => LabError::Config(other.to_string()),
    }
}
