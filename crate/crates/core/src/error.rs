use thiserror::Error;

/// Errors produced by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("spectral point mu = {mu} lies outside the bulk |mu| < {edge}")]
    OutsideBulk { mu: f64, edge: f64 },

    #[error("unsupported order {order} (maximum {max})")]
    UnsupportedOrder { order: usize, max: usize },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("eigensolver did not converge after {iterations} iterations")]
    SolverFailure { iterations: usize },

    #[error("tolerance not reached: best value {best:e} with estimated error {achieved:e}")]
    Accuracy { best: f64, achieved: f64 },

    #[error("integral diverges: {0}")]
    Divergence(String),

    #[error("degenerate fit: {0}")]
    Fit(String),

    #[error("no divergence for k = {0} < 1")]
    NoDivergence(f64),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
