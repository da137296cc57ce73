use thiserror::Error;

/// Errors produced by the solver library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("mixed strategy has empty support")]
    EmptySupport,

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("invalid strategy space: {0}")]
    InvalidSpace(String),

    #[error("point {point:?} lies outside the strategy space of player {player}")]
    OutsideSpace { player: usize, point: Vec<f64> },

    #[error("invalid game: {0}")]
    InvalidGame(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("linear program failed: {0}")]
    Lp(String),

    #[error("master solver {solver} cannot handle this subgame: {reason}")]
    Dispatch { solver: &'static str, reason: String },

    #[error("oracle error: {0}")]
    Oracle(String),

    #[error("game file error at line {line}: {message}")]
    GameFile { line: usize, message: String },

    #[error("unknown example game {0} (expected 1..=5)")]
    UnknownExample(usize),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
