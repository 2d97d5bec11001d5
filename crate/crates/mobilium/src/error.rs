//! Crate-wide error type.
//!
//! Every fallible operation reports through [`Error`]; numerical checks that
//! merely *fail* (as opposed to being impossible to run) report through
//! [`crate::report::Report`] instead, so a failed tolerance never panics.

use thiserror::Error;

/// Errors shared by the series, window, solver and curve layers.
#[derive(Debug, Error)]
pub enum Error {
    /// Two series built over different variable universes were combined.
    #[error("variable universe mismatch: {0}")]
    VariableMismatch(String),

    /// A coefficient beyond the truncation order was requested.
    #[error("monomial degree {degree} exceeds truncation order {order}")]
    OutOfTruncation { degree: u32, order: u32 },

    /// Inversion of a series whose constant term is zero.
    #[error("series is not invertible: constant term vanishes")]
    NonInvertible,

    /// A numeric evaluation was missing a variable assignment.
    #[error("evaluation error: {0}")]
    Evaluation(String),

    /// A band-window entry was requested outside the guarded region.
    #[error("window guard violation: entry ({i},{j}) of power {k} needs rows beyond size {size}")]
    GuardViolation { i: usize, j: usize, k: usize, size: usize },

    /// An entry outside the declared band structure was written.
    #[error("band structure violation at ({i},{j}): {detail}")]
    BandViolation { i: usize, j: usize, detail: String },

    /// A sequence that must stabilize in the window did not.
    #[error("not stabilized at window edge: {0}")]
    NotStabilized(String),

    /// A fixed-point or Newton iteration failed to converge.
    #[error("iteration did not converge: {0}")]
    NonConvergence(String),

    /// The spectral curve degenerated (vanishing leading data, coincident
    /// moduli, tacnodes, ...).
    #[error("degenerate curve data: {0}")]
    Degenerate(String),

    /// Root bookkeeping failed (wrong count, failed match).
    #[error("root accounting error: {0}")]
    RootCount(String),

    /// Double-point pairing was ambiguous or failed verification.
    #[error("double point pairing failed: {0}")]
    Pairing(String),

    /// The oracle's label window was too small for a conclusive count.
    #[error("oracle inconclusive: a generated tree touched the label window boundary")]
    Inconclusive,

    /// Invalid run configuration.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// I/O or serialization failure.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// JSON serialization failure.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
