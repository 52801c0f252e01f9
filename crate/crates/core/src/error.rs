use thiserror::Error;

/// Errors produced by the library and mapped to CLI exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("count tensor has zero total")]
    ZeroTotal,

    #[error("shape mismatch: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        expected: Vec<usize>,
        actual: Vec<usize>,
    },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("distribution does not sum to 1 (sum = {0})")]
    NotNormalized(f64),

    #[error("negative probability {value} at cell {index}")]
    NegativeProbability { index: usize, value: f64 },

    #[error("window widths must be positive (dx = {dx}, dk = {dk})")]
    NonpositiveWindow { dx: f64, dk: f64 },

    #[error("viewing extents must be positive (Lx = {lx}, Lk = {lk})")]
    NonpositiveExtent { lx: f64, lk: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("factor {factor} does not divide axis of {windows} windows")]
    NonDivisibleFactor { factor: usize, windows: usize },

    #[error("grid misses {tail_mass:.3e} of the density mass (tolerance {tolerance:.1e})")]
    Truncation { tail_mass: f64, tolerance: f64 },

    #[error("bootstrap margins have zero spread over {n_boot} replicates")]
    DegenerateBootstrap { n_boot: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error in {source_name} at line {line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("negative count {value} at line {line}, column {column}")]
    NegativeCount {
        line: usize,
        column: usize,
        value: String,
    },

    #[error("count total overflows u64")]
    CountOverflow,

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code: 1 = usage, 2 = data, 3 = numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidParameter(_) => 1,
            Error::ZeroTotal
            | Error::ShapeMismatch { .. }
            | Error::InvalidGrid(_)
            | Error::NotNormalized(_)
            | Error::NegativeProbability { .. }
            | Error::DimensionMismatch(_)
            | Error::NonDivisibleFactor { .. }
            | Error::Parse { .. }
            | Error::NegativeCount { .. }
            | Error::CountOverflow
            | Error::Io { .. }
            | Error::Json(_) => 2,
            Error::NonpositiveWindow { .. }
            | Error::NonpositiveExtent { .. }
            | Error::Truncation { .. }
            | Error::DegenerateBootstrap { .. } => 3,
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
