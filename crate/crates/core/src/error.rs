use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(
        "insufficient data: {retained} of {occupied} occupied bins hold at least {min_games} games, \
         at least 3 non-collinear bins are required"
    )]
    InsufficientData {
        occupied: usize,
        retained: usize,
        min_games: usize,
    },

    #[error("undefined statistic: {0}")]
    UndefinedStatistic(String),

    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
