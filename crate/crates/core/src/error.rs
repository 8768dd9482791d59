use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("invalid bitrate ladder: {0}")]
    InvalidLadder(String),

    #[error("invalid video spec: {0}")]
    InvalidVideo(String),

    #[error("invalid chunk reference: {0}")]
    InvalidChunk(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// A malformed CSV row. `line` is 1-based and counts the header.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid trace: {0}")]
    InvalidTrace(String),

    #[error("no behavior traces for category `{0}`")]
    EmptyCategory(String),

    #[error("chunk {k} out of range 1..={total}")]
    ChunkOutOfRange { k: usize, total: usize },

    #[error("elapsed time must be positive, got {0}")]
    NonPositiveElapsed(f64),

    #[error("throughput history is empty")]
    EmptyHistory,

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("invalid script: {0}")]
    InvalidScript(String),

    #[error("unknown strategy `{name}` (valid: {valid})")]
    UnknownStrategy { name: String, valid: String },

    #[error("unknown scenario `{0}` (valid: high, medium, low, mixed)")]
    UnknownScenario(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
