use thiserror::Error;

/// Failure modes shared by every computation in the crate.
///
/// The variants are grouped by what the caller can do about them: a
/// [`Error::Domain`] error means the inputs are outside the region where the
/// quantity exists, an [`Error::Accuracy`] error means a numerical check failed
/// and a finer discretization may help.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("no wavefront: {0}")]
    NoWavefront(String),
    #[error("accuracy error: {0}")]
    Accuracy(String),
    #[error("convergence failure: {0}")]
    Convergence(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical instability: {0}")]
    Instability(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn no_wavefront(msg: impl Into<String>) -> Self {
        Error::NoWavefront(msg.into())
    }

    pub(crate) fn accuracy(msg: impl Into<String>) -> Self {
        Error::Accuracy(msg.into())
    }

    pub(crate) fn convergence(msg: impl Into<String>) -> Self {
        Error::Convergence(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// True for errors that signal a numerical shortfall rather than bad input.
    pub fn is_accuracy(&self) -> bool {
        matches!(
            self,
            Error::Accuracy(_) | Error::Convergence(_) | Error::Instability(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
