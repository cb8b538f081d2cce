//! Crate-wide error type and the coarse failure categories used for
//! process exit codes.

use thiserror::Error;

/// Coarse failure class, used by callers (the CLI in particular) to pick a
/// distinct exit code per kind of failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// Bad or missing input data: manifests, frames, cache files.
    Ingestion,
    /// The requested procedure is not runnable on the given data
    /// (e.g. a single-subject dataset cannot be split leave-one-subject-out).
    Protocol,
    /// A numeric or structural failure inside the pipeline itself.
    Computation,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Appearance(#[from] crate::appearance::AppearanceError),
    #[error(transparent)]
    Dynamics(#[from] crate::dynamics::DynamicsError),
    #[error(transparent)]
    Classify(#[from] crate::classify::ClassifyError),
    #[error(transparent)]
    Eval(#[from] crate::eval::EvalError),
    #[error(transparent)]
    Cache(#[from] crate::cache::CacheError),
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Appearance(_) => ErrorCategory::Computation,
            Error::Dynamics(_) => ErrorCategory::Computation,
            Error::Classify(_) => ErrorCategory::Computation,
            Error::Eval(e) => e.category(),
            Error::Cache(_) => ErrorCategory::Ingestion,
        }
    }
}
