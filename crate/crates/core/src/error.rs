use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid cone specification: {0}")]
    InvalidCone(String),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("jordan inverse undefined: point is not in the cone interior")]
    SingularOperator,

    #[error("point is not in the cone interior")]
    NotInterior,

    #[error("nesterov-todd scaling failed: {0}")]
    ScalingFailure(String),

    #[error("sparse second-order cone expansion failed: {0}")]
    ExpansionFailure(String),

    #[error("matrix must be square, got {0}x{1}")]
    NotSquare(usize, usize),

    #[error("problem instance does not belong to the family: {0}")]
    FamilyMismatch(String),

    #[error("invalid problem data: {0}")]
    InvalidProblem(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("malformed file: {0}")]
    Malformed(String),

    #[error("unsupported format version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("checksum mismatch (stored {stored:#010x}, computed {computed:#010x})")]
    Checksum { stored: u32, computed: u32 },

    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),

    #[error("invalid generator parameters: {0}")]
    InvalidParameters(String),

    #[error("empty record set")]
    EmptyRecords,

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
