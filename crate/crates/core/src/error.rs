use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument is outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The input data violates a structural rule of the two-population design.
    #[error("validation error: {message}")]
    Validation {
        message: String,
        /// Cohort labels implicated, if any.
        cohorts: Vec<String>,
    },

    /// The data carry no information for the requested statistic
    /// (e.g. no events, zero variance).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// An internal guarantee was broken; indicates a bug or an input that
    /// slipped past validation.
    #[error("invariant violated: {0}")]
    Invariant(String),

    /// A row of tabular input could not be read. Rows are 1-based data rows,
    /// excluding the header.
    #[error("row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        Error::Degenerate(msg.into())
    }

    pub(crate) fn invariant(msg: impl Into<String>) -> Self {
        Error::Invariant(msg.into())
    }

    /// True for errors caused by the statistical content of otherwise
    /// well-formed data.
    pub fn is_statistical(&self) -> bool {
        matches!(self, Error::Degenerate(_) | Error::Invariant(_))
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
