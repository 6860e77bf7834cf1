use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The integrand produced NaN or an infinity at a quadrature node.
    #[error("integrand returned a non-finite value at x = {x}")]
    NonFinite { x: f64 },

    #[error("quadrature did not converge: {reason}")]
    ConvergenceFailure { reason: String },

    /// A lattice sum or truncated series failed its convergence diagnostic.
    #[error("series did not converge: {reason}")]
    NonConvergence { reason: String },

    #[error("argument outside the domain: {0}")]
    Domain(String),

    #[error("form not positive definite: ({a1},{a2},{a3}) has 4*a1*a3 - a2^2 = {disc}")]
    NotPositiveDefinite { a1: i64, a2: i64, a3: i64, disc: i64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    pub(crate) fn convergence(reason: impl Into<String>) -> Self {
        Error::ConvergenceFailure { reason: reason.into() }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
