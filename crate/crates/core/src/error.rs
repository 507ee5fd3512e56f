use thiserror::Error;

/// Errors produced by the densities, samplers and the Gibbs machinery.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain where the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// Inputs with inconsistent shapes (data, predictors, truth, draws).
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A numerical routine failed (non-finite values, loss of definiteness,
    /// a root finder that did not converge).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A Gibbs sweep failed; carries the sweep index.
    #[error("sweep {sweep}: {source}")]
    Sweep {
        sweep: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
