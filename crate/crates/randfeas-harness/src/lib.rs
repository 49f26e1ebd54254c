//! Benchmark harness for the feasibility-pass solver library: experiment
//! configs, replica orchestration, CSV/SVG reporting, schedule verification,
//! primal-dual grid search, and a long-run reference solver.

pub mod config;
pub mod csvout;
pub mod experiment;
pub mod grid;
pub mod plot;
pub mod reference;
pub mod verify;

use thiserror::Error;

/// Process exit codes used by the CLI.
pub mod exit_codes {
    pub const SUCCESS: i32 = 0;
    pub const CONFIG: i32 = 2;
    pub const ALL_DIVERGED: i32 = 3;
    pub const IO: i32 = 4;
}

/// Harness-level failures, each mapped to a distinct exit code.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {message}")]
    Config { message: String },
    #[error("all {replicas} replicas diverged; first failure at iteration {first_iteration}")]
    AllReplicasDiverged {
        replicas: usize,
        first_iteration: usize,
    },
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("solver failed: {0}")]
    Solver(#[from] randfeas::SolverError),
    #[error("problem construction failed: {0}")]
    Problem(#[from] randfeas::problems::ProblemError),
    #[error(transparent)]
    Core(#[from] randfeas::CoreError),
}

impl HarnessError {
    /// The process exit code this failure maps to.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config { .. } => exit_codes::CONFIG,
            HarnessError::AllReplicasDiverged { .. } => exit_codes::ALL_DIVERGED,
            HarnessError::Io { .. } => exit_codes::IO,
            HarnessError::Solver(_) | HarnessError::Problem(_) | HarnessError::Core(_) => {
                exit_codes::CONFIG
            }
        }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        HarnessError::Io {
            context: context.into(),
            source,
        }
    }
}
