//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A majorant violated one of the standing hypotheses.
    #[error("majorant '{name}' fails validation: {reason}")]
    InvalidMajorant { name: String, reason: String },

    /// J' never becomes positive on the scan window, so J is (numerically) bounded.
    #[error("majorant '{0}': J' <= 0 across the scan window (bounded J)")]
    BoundedJ(String),

    /// Growth equation queried below the solvable threshold.
    #[error("k = {k} is at or below the threshold k0 = {k0}")]
    BelowThreshold { k: f64, k0: f64 },

    /// Bracket expansion failed to find a sign change.
    #[error("no sign-change bracket found after {0} doublings")]
    NoBracket(usize),

    /// Iterative solver ran out of iterations.
    #[error("root finder failed to converge: {0}")]
    NoConvergence(String),

    /// Constrained optimization has an empty admissible interval.
    #[error("k = {k} too small for eps1 = {eps1}")]
    KTooSmallForEps1 { k: f64, eps1: f64 },

    /// Inverse evaluation outside the increasing branch.
    #[error("value {value} below the range start {lo} of the increasing branch")]
    OutOfRange { value: f64, lo: f64 },

    /// Gram matrix is not (numerically) positive definite.
    #[error("Gram matrix not positive definite: quadrature too coarse or positivity lost")]
    GramNotPositive,

    /// Adaptive quadrature failed to reach the requested tolerance.
    #[error("quadrature failed to converge: {0}")]
    QuadratureFailure(String),

    /// A regression problem without enough information to fit.
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    /// Malformed configuration input.
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code used by the command-line front end:
    /// 2 for configuration/domain problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_)
            | Error::InvalidMajorant { .. }
            | Error::BelowThreshold { .. }
            | Error::KTooSmallForEps1 { .. }
            | Error::OutOfRange { .. }
            | Error::Config(_)
            | Error::Io(_) => 2,
            Error::BoundedJ(_)
            | Error::NoBracket(_)
            | Error::NoConvergence(_)
            | Error::GramNotPositive
            | Error::QuadratureFailure(_)
            | Error::DegenerateFit(_) => 3,
        }
    }
}
