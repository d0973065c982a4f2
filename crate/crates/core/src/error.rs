use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error at line {line}: {message}")]
    Csv { line: u64, message: String },

    #[error("row {row}, column '{column}': {message}")]
    BadCell {
        row: u64,
        column: String,
        message: String,
    },

    #[error("duplicate column name '{0}'")]
    DuplicateName(String),

    #[error("empty body: no data rows")]
    EmptyBody,

    #[error("invalid dataset: {0}")]
    InvalidData(String),

    #[error("zero-range series '{0}': cannot discretise a constant series")]
    ZeroRange(String),

    #[error("embedding exceeds data length for subsystem {subsystem}: (kappa-1)*tau = {depth} >= N-1 = {limit}")]
    EmbeddingTooLong {
        subsystem: usize,
        depth: usize,
        limit: usize,
    },

    #[error("invalid parameter '{field}': {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("estimator mismatch: {0}")]
    EstimatorMismatch(String),

    #[error("degenerate covariance: {0}")]
    DegenerateCovariance(String),

    #[error("empty view: no usable rows")]
    EmptyView,

    #[error("df overflow: degrees of freedom exceed u64 for vertex {0}")]
    DfOverflow(usize),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("graph parse error at line {line}: {message}")]
    DotParse { line: usize, message: String },

    #[error("too many vertices for exhaustive search: {0} > 6 (use greedy search)")]
    TooManyVertices(usize),

    #[error("simulation diverged at step {step}: subsystem {subsystem} has non-finite state")]
    Diverged { step: usize, subsystem: usize },

    #[error("nonstationary system: spectral radius {0} >= 1")]
    Nonstationary(f64),
}

impl Error {
    pub(crate) fn param(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad user input rather than numerics or IO.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::Io { .. }
                | Error::DegenerateCovariance(_)
                | Error::Diverged { .. }
                | Error::DfOverflow(_)
        )
    }
}
