use thiserror::Error;

#[derive(Debug, Error)]
pub enum RuelleError {
    #[error("alphabet must contain at least one point")]
    EmptyAlphabet,

    #[error("weight {value} at index {index} is not strictly positive")]
    NonpositiveWeight { index: usize, value: f64 },

    #[error("{got} weights supplied for {want} labels")]
    WeightCountMismatch { got: usize, want: usize },

    #[error("circle discretization needs node_count >= 2, got {0}")]
    BadNodeCount(usize),

    #[error("symbol index {index} out of range for alphabet of size {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("configurations refer to alphabets of different sizes ({left} vs {right})")]
    SpaceMismatch { left: usize, right: usize },

    #[error("enumerating {n_symbols}^{n} words exceeds the cap of {cap}; use seeded sampling instead")]
    CapExceeded { n_symbols: usize, n: usize, cap: usize },

    #[error("{0}")]
    Domain(String),

    #[error("sampling requested without a seed")]
    MissingSeed,

    #[error("observable depends on coordinates <= {n}; properness requires sigma^{n}-measurability")]
    NotTailMeasurable { n: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, RuelleError>;

impl RuelleError {
    /// Shorthand for parameter-domain violations.
    pub fn domain(msg: impl Into<String>) -> Self {
        RuelleError::Domain(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        RuelleError::Config(msg.into())
    }
}
