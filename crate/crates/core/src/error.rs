//! Crate-wide error type.

use thiserror::Error;

/// Errors raised by the protocol, attack, oracle and accounting routines.
#[derive(Debug, Error)]
pub enum Error {
    /// Two operands have incompatible shapes.
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    /// A parameter lies outside the domain of the operation.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// A client submission failed the doubly-stochastic integrity check.
    #[error("integrity check failed for client {client}: {reason}")]
    Integrity {
        /// Index of the offending client (0-based).
        client: usize,
        /// Human readable reason.
        reason: String,
    },
    /// The requested exhaustive search exceeds its size cap.
    #[error("size cap exceeded: {0}")]
    SizeCap(String),
    /// The transcript does not carry the data the operation needs.
    #[error("unsupported variant: {0}")]
    UnsupportedVariant(String),
    /// A solver found no admissible point.
    #[error("infeasible: {0}")]
    Infeasible(String),
    /// The recovered aggregate is too far from an integer to round safely.
    #[error("rounding guard violated: value {value} is {distance} away from the nearest integer")]
    RoundingGuard {
        /// The unrounded quotient.
        value: f64,
        /// Distance to the nearest integer.
        distance: f64,
    },
    /// Filesystem failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),
    /// JSON (de)serialization failure.
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    /// CSV serialization failure.
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
