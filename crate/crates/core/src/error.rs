//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by model construction, quadrature, solvers and diagnostics.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates its domain (must be positive, etc.).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Gradient of the log-target is undefined at the requested point.
    #[error("gradient undefined at the origin for tail exponent alpha = {alpha} <= 1")]
    GradientUndefined { alpha: f64 },

    /// The proposal density vanishes where a positive value is required.
    #[error("proposal density is zero at the requested transition")]
    ZeroProposalDensity,

    /// The target density vanishes at the current state of a simulation.
    #[error("target density is zero at the current state; acceptance ratio undefined")]
    ZeroTargetDensity,

    /// An operation specific to one proposal family was called on another.
    #[error("operation requires a {expected} proposal")]
    WrongProposalVariant { expected: &'static str },

    /// Adaptive quadrature exhausted its subdivision budget.
    #[error("quadrature did not converge: achieved error {achieved:e}, required {required:e}")]
    QuadratureNonconvergence { achieved: f64, required: f64 },

    /// The integrand keeps growing at the truncation boundary.
    #[error("integral diverges: integrand still increasing at |y| = {boundary}")]
    DivergentIntegral { boundary: f64 },

    /// The discretization grid misses too much target mass.
    #[error("grid covers only {mass} of the target mass; at least {required} required")]
    InsufficientCoverage { mass: f64, required: f64 },

    /// Row renormalization during discretization moved mass beyond tolerance.
    #[error("row {row} renormalization factor {factor} outside 1 +/- {tolerance}")]
    RenormalizationOutOfRange { row: usize, factor: f64, tolerance: f64 },

    /// A transition matrix fails row-stochasticity.
    #[error("matrix is not row-stochastic: row {row} sums to {sum}")]
    NotRowStochastic { row: usize, sum: f64 },

    /// The chain does not have a unique stationary vector.
    #[error("stationary vector not unique: spectral gap estimate {gap:e} <= {required:e}")]
    NonUniqueStationary { gap: f64, required: f64 },

    /// Dynamic program size exceeds the configured budget.
    #[error("occupancy DP size {cost:e} exceeds budget {budget:e}")]
    DpBudgetExceeded { cost: f64, budget: f64 },

    /// A drift certificate failed verification where it was required to hold.
    #[error("drift certificate not verified: {0}")]
    CertificateUnverified(String),

    /// Probe schedules must be non-degenerate.
    #[error("invalid probe schedule: {0}")]
    InvalidProbe(String),

    /// Mismatched dimensions between points, grids or vectors.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
