use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure of one of the library's operation contracts.
///
/// Every variant carries the name of the operation whose contract failed so
/// callers can report it without a lookup table.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("{op}: operands belong to different prime contexts")]
    ContextMismatch { op: &'static str },

    #[error("{op}: exponent {exponent} escapes the window [-{window}, {window}]")]
    WindowOverflow {
        op: &'static str,
        exponent: i128,
        window: i64,
    },

    #[error("{op}: level {level} needs precision above {prec}")]
    PrecisionExceeded {
        op: &'static str,
        level: u32,
        prec: u32,
    },

    #[error("{op}: precondition failed: {detail}")]
    Precondition { op: &'static str, detail: String },

    #[error("{op}: no convergence after {iterations} iterations")]
    NonConvergence { op: &'static str, iterations: usize },

    #[error("{op}: insufficient data: {detail}")]
    InsufficientData { op: &'static str, detail: String },

    #[error("invalid literal: {0}")]
    Literal(String),
}

impl Error {
    pub(crate) fn pre(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Precondition {
            op,
            detail: detail.into(),
        }
    }

    pub(crate) fn data(op: &'static str, detail: impl Into<String>) -> Self {
        Error::InsufficientData {
            op,
            detail: detail.into(),
        }
    }

    /// Name of the operation whose contract was violated.
    pub fn operation(&self) -> &'static str {
        match self {
            Error::ContextMismatch { op }
            | Error::WindowOverflow { op, .. }
            | Error::PrecisionExceeded { op, .. }
            | Error::Precondition { op, .. }
            | Error::NonConvergence { op, .. }
            | Error::InsufficientData { op, .. } => op,
            Error::Literal(_) => "literal",
        }
    }

    /// Short machine-readable kind tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::ContextMismatch { .. } => "context_mismatch",
            Error::WindowOverflow { .. } => "window_overflow",
            Error::PrecisionExceeded { .. } => "precision_exceeded",
            Error::Precondition { .. } => "precondition",
            Error::NonConvergence { .. } => "non_convergence",
            Error::InsufficientData { .. } => "insufficient_data",
            Error::Literal(_) => "schema",
        }
    }
}
