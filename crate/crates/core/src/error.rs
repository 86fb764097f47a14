use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside the domain of the operation.
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: String,
        reason: &'static str,
    },

    /// `1 - β(1 - m²) ≤ 0`: the CLT variance is undefined (critical point).
    #[error("degenerate variance: 1 - beta (1 - m^2) = {denominator} <= 0")]
    DegenerateVariance { denominator: f64 },

    /// `(n + k) / 2` is not an integer in `[0, n]`.
    #[error("total spin {k} is incompatible with {n} spins")]
    Parity { n: usize, k: i64 },

    /// An overlap triple violates the admissibility constraints.
    #[error("overlap triple (k={k}, l={l}, n={overlap}) is not admissible for N={n}")]
    InadmissibleTriple {
        n: usize,
        k: i64,
        l: i64,
        overlap: i64,
    },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// Exact enumeration visits `2^N` configurations; refuse beyond the cap.
    #[error("exact enumeration of N={n} exceeds the cap of {cap}")]
    EnumerationCap { n: usize, cap: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("measure has total mass {mass}, expected 1")]
    NotNormalized { mass: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, value: impl ToString, reason: &'static str) -> Self {
        Error::InvalidParameter {
            name,
            value: value.to_string(),
            reason,
        }
    }

    /// Whether the error stems from bad user input rather than a runtime failure.
    pub fn is_usage(&self) -> bool {
        !matches!(self, Error::Io(_) | Error::Json(_) | Error::Csv(_))
    }
}
