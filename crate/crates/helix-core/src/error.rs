use thiserror::Error;

/// Errors surfaced by the library.
///
/// `Regime` is kept separate from plain validation failures because callers
/// (the CLI, the sweep harness) treat a construction that refuses a parameter
/// regime differently from a malformed input.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("regime refusal: {0}")]
    Regime(String),

    #[error("grid too coarse: {0}")]
    Grid(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("degenerate spin pair: {0}")]
    Degenerate(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub fn regime(msg: impl Into<String>) -> Self {
        Error::Regime(msg.into())
    }

    pub fn grid(msg: impl Into<String>) -> Self {
        Error::Grid(msg.into())
    }

    pub fn geometry(msg: impl Into<String>) -> Self {
        Error::Geometry(msg.into())
    }
}
