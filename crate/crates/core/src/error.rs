use alloc::string::String;
use alloc::vec::Vec;

/// Errors raised by the numerical pipeline.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("kernel value is not finite at node {node:?}")]
    NonFiniteKernel { node: Vec<f64> },

    #[error("quadrature did not converge (estimate {estimate:e}, previous {previous:e})")]
    QuadratureNonConvergence { estimate: f64, previous: f64 },

    #[error("non-finite value at node {node}{}", match step { Some(k) => alloc::format!(" in step {k}"), None => String::new() })]
    NonFiniteResult { node: usize, step: Option<usize> },

    #[error("drift requires s >= 1/2 (got s = {s})")]
    DriftRequiresCriticalOrder { s: f64 },

    #[error("Isaac family is empty")]
    EmptyFamily,

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
