use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty batch")]
    EmptyBatch,

    #[error("invalid network spec: {0}")]
    InvalidSpec(String),

    #[error("target kind does not match loss: {0}")]
    TargetMismatch(&'static str),

    #[error("bad magic: expected {expected:#010x}, found {found:#010x}")]
    BadMagic { expected: u32, found: u32 },

    #[error("truncated stream: need {needed} bytes, have {available}")]
    Truncated { needed: usize, available: usize },

    #[error("IDX dimensions overflow")]
    DimensionOverflow,

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("requested {requested} training samples but only {available} are available")]
    TrainCapExceeded { requested: usize, available: usize },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("eigen-decomposition did not converge after {0} sweeps")]
    EigenNoConvergence(usize),

    #[error("requested {requested} components but only {available} eigenvalues exceed the cutoff")]
    TooManyComponents { requested: usize, available: usize },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("invalid solution file: {0}")]
    SolutionFile(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    TomlDe(#[from] toml::de::Error),

    #[error(transparent)]
    TomlSer(#[from] toml::ser::Error),
}
