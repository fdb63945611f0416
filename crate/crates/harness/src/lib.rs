//! Scenario files, simulation driving and result rendering.

pub mod oracle;
pub mod report;
pub mod runner;
pub mod scenario;
pub mod types;
pub mod validate;

pub use runner::{run_scenario, RoundOutcome, RoundResult, RunResult};
pub use scenario::Scenario;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid scenario:\n{}", .0.join("\n"))]
    Invalid(Vec<String>),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        1
    }
}
