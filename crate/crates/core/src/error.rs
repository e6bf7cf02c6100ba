use std::fmt;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by construction and evaluation routines.
#[derive(Debug)]
pub enum Error {
    /// A precondition on an argument was violated.
    Domain(String),
    /// A covering could not be verified; carries the sampled points that
    /// remained uncovered after all radius-doubling retries.
    Construction {
        message: String,
        uncovered: Vec<Vec<f64>>,
    },
    /// A coefficient set was paired with a covering it was not computed from.
    CoveringMismatch { expected: String, found: String },
    Io(std::io::Error),
    Json(serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::Construction { message, uncovered } => {
                write!(f, "construction error: {message} ({} uncovered points)", uncovered.len())
            }
            Error::CoveringMismatch { expected, found } => {
                write!(f, "covering mismatch: coefficients built for {expected}, got {found}")
            }
            Error::Io(e) => write!(f, "io error: {e}"),
            Error::Json(e) => write!(f, "json error: {e}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            Error::Json(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e)
    }
}
