use std::io;

/// Failure of one invocation; each variant maps to a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] delayfront::Error),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    /// 1 for domain and input failures, 2 for accuracy failures, 3 for usage.
    pub fn exit_code(&self) -> i32 {
        use delayfront::Error as E;
        match self {
            CliError::Usage(_) | CliError::Core(E::Config(_)) => 3,
            CliError::Core(E::Domain(_) | E::NoWavefront(_)) | CliError::Io(_) => 1,
            CliError::Core(
                E::Accuracy(_) | E::Convergence(_) | E::Instability(_) | E::InsufficientData(_),
            ) => 2,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
