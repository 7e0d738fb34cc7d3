use std::path::PathBuf;

/// Everything that can go wrong inside the library.
///
/// The CLI maps [`Error::Statistical`] to exit code 3 and everything caused by
/// bad input to exit code 2.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate direction: {0}")]
    DegenerateDirection(String),

    #[error("kernel table has no data at tau={tau}, r={r} (table covers tau<={tau_max}, r<={r_max})")]
    Extrapolation {
        tau: f64,
        r: f64,
        tau_max: f64,
        r_max: f64,
    },

    #[error("kernel table {path}: {reason}")]
    TableMismatch { path: PathBuf, reason: String },

    #[error("statistical failure: {0}")]
    Statistical(String),

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True when the error means "sample more", not "the input was wrong".
    pub fn is_statistical(&self) -> bool {
        matches!(self, Error::Statistical(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
