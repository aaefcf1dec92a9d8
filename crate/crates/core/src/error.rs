use std::io;

/// Errors produced by the circreg library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("non-finite value: {0}")]
    NonFinite(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("circular mean is undefined (resultant length {0:e})")]
    DegenerateMean(f64),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("data error at line {line}: {message}")]
    Data { line: u64, message: String },

    #[error("empty dataset")]
    EmptyData,

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Coarse classification of an [`Error`], used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Numerical,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidArgument(_) | Error::Config(_) => ErrorKind::Usage,
            Error::Data { .. } | Error::EmptyData | Error::Io(_) | Error::Csv(_) => ErrorKind::Data,
            Error::NonFinite(_) | Error::DegenerateMean(_) | Error::Numerical(_) => {
                ErrorKind::Numerical
            }
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
