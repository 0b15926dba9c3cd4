use thiserror::Error;

/// Errors raised by the simulator library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported overlapping factor K = {0}; supported values are 2, 3, 4")]
    UnsupportedOverlap(usize),

    #[error("number of subcarriers L = {0} must be even and at least 2")]
    OddSubcarriers(usize),

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("{0} must not be empty")]
    Empty(&'static str),

    #[error("window offset {0} is negative")]
    NegativeOffset(i64),

    #[error("singular MMSE system at bin {bin} (noise variance {noise_variance})")]
    SingularBin { bin: usize, noise_variance: f64 },

    #[error("invalid channel profile: {0}")]
    Profile(String),

    #[error("invalid configuration: {field}: {reason}")]
    Config { field: String, reason: String },

    #[error("failed to parse configuration: {0}")]
    Parse(#[from] toml::de::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn dim(context: &'static str, expected: usize, got: usize) -> Self {
        Error::Dimension {
            context,
            expected,
            got,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
