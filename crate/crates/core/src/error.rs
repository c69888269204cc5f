use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A setting or configuration violates its invariants.
    #[error("configuration error: {0}")]
    Config(String),
    /// A numerical routine produced something it should not have.
    #[error("numerical error: {0}")]
    Numerical(String),
    /// Gram matrices are not STEP-symmetric.
    #[error("structural error: {0}")]
    Structural(String),
    #[error("solver error: {0}")]
    Solver(String),
    #[error("training diverged at epoch {epoch}: {reason}")]
    Divergence { epoch: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
