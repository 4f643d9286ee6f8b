use thiserror::Error;

/// Errors raised while reading or combining structures, models and configurations.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid structure: {0}")]
    InvalidStructure(String),
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("model {model} is not compatible with this instance: {reason}")]
    IncompatibleModel { model: String, reason: String },
    #[error("expected {expected} free bits, got {actual}")]
    BitLength { expected: usize, actual: usize },
    #[error("query semantics do not match the configuration ({0})")]
    SemanticsMismatch(String),
    #[error("{free} free bits exceeds the enumeration cap of {cap}; use Monte Carlo instead")]
    EnumerationCap { free: usize, cap: usize },
    #[error("member set of size {size} exceeds the limit of {limit}")]
    SetTooLarge { size: usize, limit: usize },
    #[error("flip mode does not match the model class")]
    FlipModeMismatch,
    #[error("not a path: {0}")]
    NotAPath(String),
    #[error("mirror precondition violated: {0}")]
    MirrorPrecondition(String),
    #[error("no threshold found below k = {0}")]
    NoThreshold(u64),
    #[error("parameter out of range: {0}")]
    Parameter(String),
    #[error("transcription check failed: {0}")]
    Transcription(String),
}

pub type Result<T> = std::result::Result<T, Error>;
