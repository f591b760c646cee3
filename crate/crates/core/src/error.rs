use std::fmt;

use thiserror::Error;

/// A validation problem attached to the key path that caused it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldError {
    pub path: String,
    pub message: String,
}

impl FieldError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Error)]
pub enum SttError {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },

    #[error("invalid task: {0}")]
    InvalidTask(String),

    #[error("invalid configuration:\n{}", format_fields(.0))]
    Config(Vec<FieldError>),

    #[error("infeasible scenario (obstacle {obstacle}): {reason}")]
    Infeasible { obstacle: usize, reason: String },

    #[error("assumption violated: {0}")]
    AssumptionViolation(String),

    #[error("tube synthesis failed at t = {t}: {reason}")]
    SynthesisFailure { t: f64, reason: String },

    #[error("state left the tube in dimension {dim} at t = {t} (normalized error {e})")]
    TubeViolation { dim: usize, t: f64, e: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("malformed tube file: {0}")]
    TubeFormat(String),

    #[error("empty trace")]
    EmptyTrace,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn format_fields(fields: &[FieldError]) -> String {
    fields
        .iter()
        .map(|f| format!("  {f}"))
        .collect::<Vec<_>>()
        .join("\n")
}

pub type Result<T, E = SttError> = std::result::Result<T, E>;
