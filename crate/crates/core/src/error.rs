use thiserror::Error;

/// Errors raised by the solvers and verifiers in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("vector is too close to the origin for a derivative")]
    ZeroVector,

    #[error("invalid norm: {0}")]
    InvalidNorm(String),

    #[error("invalid nonlinearity: {0}")]
    InvalidNonlinearity(String),

    #[error("input must be nonnegative, got {0}")]
    NegativeInput(f64),

    #[error("input must be positive, got {0}")]
    NonpositiveInput(f64),

    #[error("value {value} lies outside the range of the profile (supremum {sup})")]
    OutOfRange { value: f64, sup: f64 },

    #[error("Keller-Osserman integral diverges")]
    DivergentIntegral,

    #[error("no root: half-width {delta} exceeds the flat-zone threshold {limit}")]
    NoRoot { delta: f64, limit: f64 },

    #[error("root bracketing failed: {0}")]
    BracketFail(String),

    #[error("Osgood classification inconclusive after {steps} dyadic steps")]
    Inconclusive { steps: usize },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("point lies outside the domain")]
    OutsideDomain,

    #[error("point lies outside the Wulff ball")]
    OutsideBall,

    #[error("Wulff ball of radius {radius} is not tangent to the boundary only at the base point: {reason}")]
    BallViolation { radius: f64, reason: String },

    #[error("energy increased along a descent direction ({increase:e}); the norm is probably not strongly convex")]
    NonconvexDetected { increase: f64 },

    #[error("monotone k-scheme did not stabilize (last interior change {last_change:e})")]
    NotStabilized { last_change: f64 },

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
