//! Benchmark problem families: synthetic QCQPs and soft-margin SVMs.

pub mod dataset;
pub mod qcqp;
pub mod svm;

use thiserror::Error;

use crate::error::CoreError;

/// Errors from problem generation and dataset handling.
#[derive(Debug, Error)]
pub enum ProblemError {
    /// The known-optimum construction kept landing outside the box.
    #[error("optimum fell outside the box in all {attempts} generation attempts")]
    RetriesExhausted { attempts: usize },

    #[error("dataset error: {0}")]
    Dataset(#[from] dataset::DatasetError),

    #[error(transparent)]
    Core(#[from] CoreError),
}
