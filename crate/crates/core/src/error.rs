use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty word")]
    EmptyWord,

    #[error("shift out of range: {alpha} not in [0, {len})")]
    ShiftOutOfRange { alpha: u64, len: usize },

    #[error("invalid alphabet: {0}")]
    InvalidAlphabet(String),

    #[error("invalid construction parameters: {0}")]
    InvalidParams(String),

    #[error("level {requested} is not available (configured levels: 1..={available})")]
    LevelOutOfRange { requested: usize, available: usize },

    #[error("subword of length {sub} is longer than word of length {word}")]
    SubwordTooLong { sub: usize, word: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("coordinate {value} out of range [0, {bound})")]
    CoordinateOutOfRange { value: u64, bound: u64 },

    #[error("incompatible tower point at level {level}")]
    IncompatiblePoint { level: usize },

    #[error("word length {len} exceeds the memory budget of {budget} letters")]
    MemoryBudget { len: u64, budget: u64 },

    #[error("cylinder function is not zero mean (|sum| = {0:e})")]
    NotZeroMean(f64),

    #[error("invalid lag: {0}")]
    InvalidLag(String),

    #[error("insufficient fit range: {0}")]
    InsufficientRange(String),

    #[error("{0}")]
    Invalid(String),
}

impl Error {
    /// Errors caused by resource limits rather than malformed input.
    pub fn is_resource(&self) -> bool {
        matches!(self, Error::MemoryBudget { .. })
    }
}
