use thiserror::Error;

/// Failures of the runner. Statistical failures are not errors; they are
/// reported through the verdict of a completed run.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("invalid config: {0}")]
    Validation(#[from] perpetua_core::Error),
    #[error("{failed} of {total} replications failed (first error: {first})")]
    TooManyFailures { failed: usize, total: usize, first: perpetua_core::Error },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
