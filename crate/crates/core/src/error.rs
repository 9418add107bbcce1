use thiserror::Error;

/// Errors raised by the laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum RmtError {
    /// A specification or configuration violates its invariants.
    #[error("configuration error: {0}")]
    Config(String),

    /// An argument lies outside the domain where an operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// An iterative numerical routine failed for the given seed.
    #[error("numeric error (seed {seed}): {reason}")]
    Numeric { seed: u64, reason: String },

    /// Two points coincide (or a covariance point is non-positive).
    #[error("singular configuration: {0}")]
    SingularConfiguration(String),

    /// The stochastic integrator could not keep the points ordered.
    #[error("stiffness: step halving exhausted at time {time}, offending gap {gap:e}")]
    Stiffness { time: f64, gap: f64 },

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    /// The grid cannot resolve the requested problem.
    #[error("grid too coarse: spacing {spacing:e} exceeds {required:e}")]
    GridTooCoarse { spacing: f64, required: f64 },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for RmtError {
    fn from(e: std::io::Error) -> Self {
        RmtError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, RmtError>;
