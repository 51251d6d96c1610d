use thiserror::Error;

/// Errors raised by the solver, the problem oracles and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid bounds at coordinate {index}: lower {lower} > upper {upper} or NaN")]
    InvalidBounds { index: usize, lower: f64, upper: f64 },

    #[error("point is infeasible at coordinate {index}: {value} not in [{lower}, {upper}]")]
    Infeasible {
        index: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("point is not strictly interior at coordinate {index}")]
    NotInterior { index: usize },

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("sample size must be at least 1, got {0}")]
    InvalidSampleSize(usize),

    #[error("line search failed after {backtracks} backtracks (last step {last_step:e})")]
    LineSearchFailed { last_step: f64, backtracks: usize },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("no component violates the additional-sampling condition at this point")]
    NoViolator,

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("no samples in input")]
    NoSamples,

    #[error("label encoding: {0}")]
    Labels(String),

    #[error("index {index} out of range for {len} components")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("reference solve stopped at stationarity {stationarity:e} after {iterations} iterations")]
    ReferenceNotConverged { stationarity: f64, iterations: usize },

    #[error("observed mean iterations {observed} exceed the complexity bound {bound}")]
    BoundViolated { observed: f64, bound: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
