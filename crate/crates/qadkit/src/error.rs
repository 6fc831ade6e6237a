//! Crate-wide error type.
//!
//! Every fallible operation reports which module and operation rejected the
//! input, so callers (in particular the CLI) can emit machine-readable
//! diagnostics without string-parsing.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, QadError>;

#[derive(Debug, Error)]
pub enum QadError {
    /// A stated precondition does not hold for the given input.
    #[error("{module}.{operation}: {detail}")]
    Precondition {
        module: &'static str,
        operation: &'static str,
        detail: String,
    },

    /// Operand dimensions are inconsistent.
    #[error("{module}.{operation}: dimension mismatch: {detail}")]
    DimensionMismatch {
        module: &'static str,
        operation: &'static str,
        detail: String,
    },

    /// A numerical invariant (norm, trace, unitarity, completeness, PSD-ness)
    /// is violated beyond its tolerance.
    #[error("{module}.{operation}: invariant violated: {detail}")]
    Invariant {
        module: &'static str,
        operation: &'static str,
        detail: String,
    },

    /// The input is degenerate for this operation (vanishing centroid,
    /// zero centered vector, covariance undefined, measurement impossible).
    #[error("{module}.{operation}: degenerate input: {detail}")]
    Degenerate {
        module: &'static str,
        operation: &'static str,
        detail: String,
    },

    /// The operation is defined only for a different kind of input
    /// (e.g. a pure-state resource requested for a mixed training set).
    #[error("{module}.{operation}: unsupported: {detail}")]
    Unsupported {
        module: &'static str,
        operation: &'static str,
        detail: String,
    },

    /// A dataset file does not match the expected schema.
    #[error("registry.load: schema: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("registry.load: json: {0}")]
    Json(#[from] serde_json::Error),
}

impl QadError {
    pub fn precondition(
        module: &'static str,
        operation: &'static str,
        detail: impl Into<String>,
    ) -> Self {
        QadError::Precondition {
            module,
            operation,
            detail: detail.into(),
        }
    }

    pub fn dimension(
        module: &'static str,
        operation: &'static str,
        detail: impl Into<String>,
    ) -> Self {
        QadError::DimensionMismatch {
            module,
            operation,
            detail: detail.into(),
        }
    }

    pub fn invariant(
        module: &'static str,
        operation: &'static str,
        detail: impl Into<String>,
    ) -> Self {
        QadError::Invariant {
            module,
            operation,
            detail: detail.into(),
        }
    }

    pub fn degenerate(
        module: &'static str,
        operation: &'static str,
        detail: impl Into<String>,
    ) -> Self {
        QadError::Degenerate {
            module,
            operation,
            detail: detail.into(),
        }
    }

    pub fn unsupported(
        module: &'static str,
        operation: &'static str,
        detail: impl Into<String>,
    ) -> Self {
        QadError::Unsupported {
            module,
            operation,
            detail: detail.into(),
        }
    }

    /// Module that raised the error, when known.
    pub fn module(&self) -> &'static str {
        match self {
            QadError::Precondition { module, .. }
            | QadError::DimensionMismatch { module, .. }
            | QadError::Invariant { module, .. }
            | QadError::Degenerate { module, .. }
            | QadError::Unsupported { module, .. } => module,
            QadError::Schema(_) | QadError::Json(_) => "registry",
            QadError::Io(_) => "io",
        }
    }

    /// Operation that raised the error, when known.
    pub fn operation(&self) -> &'static str {
        match self {
            QadError::Precondition { operation, .. }
            | QadError::DimensionMismatch { operation, .. }
            | QadError::Invariant { operation, .. }
            | QadError::Degenerate { operation, .. }
            | QadError::Unsupported { operation, .. } => operation,
            QadError::Schema(_) | QadError::Json(_) => "load",
            QadError::Io(_) => "io",
        }
    }

    /// Coarse error class, used by the CLI to pick exit codes.
    pub fn kind(&self) -> &'static str {
        match self {
            QadError::Precondition { .. } => "precondition",
            QadError::DimensionMismatch { .. } => "dimension-mismatch",
            QadError::Invariant { .. } => "invariant",
            QadError::Degenerate { .. } => "degenerate",
            QadError::Unsupported { .. } => "unsupported",
            QadError::Schema(_) | QadError::Json(_) => "schema",
            QadError::Io(_) => "io",
        }
    }
}
