use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A physical parameter is outside its domain (non-positive frequency, ...).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// An operation's preconditions or a type invariant does not hold.
    #[error("contract violated: {0}")]
    Contract(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64, best: Vec<f64> },

    #[error("Fock cutoff too small: leakage {leakage:.3e} exceeds {threshold:.1e}")]
    CutoffTooSmall { leakage: f64, threshold: f64 },

    /// The short-time closed forms are used outside their regime.
    #[error("outside validity regime: {0}")]
    Validity(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }
}
