use thiserror::Error;

/// Errors raised by the delay-Doppler processing chain.
#[derive(Debug, Error)]
pub enum Error {
    /// Inconsistent grid, sample rate, or parameter combination.
    #[error("configuration error: {0}")]
    Config(String),

    /// A numerical routine failed to converge or produced garbage.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// The ambiguity surface carried no energy to detect.
    #[error("no detection: surface is identically zero")]
    NoDetection,

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Process exit code used by the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Json(_) => 2,
            Error::Numerical(_) | Error::NoDetection => 3,
            Error::Io(_) => 1,
        }
    }
}
