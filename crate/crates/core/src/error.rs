use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("term beta={beta:?} has weighted degree |beta:m| = {degree} > 2")]
    DegreeTooHigh { beta: Vec<u32>, degree: String },

    #[error("symbol is not positive-definite: min sampled Re P = {min_re:e}")]
    NotPositiveDefinite { min_re: f64 },

    #[error("dual grid truncation insufficient: |integrand| reaches {residue:e} of its peak on the dual boundary (t too small for the requested resolution)")]
    DualTruncation { residue: f64 },

    #[error("spatial box too small: outer shell carries {ratio:e} of the kernel peak")]
    BoxTooSmall { ratio: f64 },

    #[error("Legendre-Fenchel supremum attained on the grid boundary after {doublings} doublings (half-width {half_width})")]
    BoundaryArgmax { doublings: usize, half_width: f64 },

    #[error("point {point:?} lies outside the interpolation grid while the kernel is not negligible there")]
    OutOfRange { point: Vec<f64> },

    #[error("memory budget exceeded: {required} grid points required, budget is {budget}")]
    MemoryBudget { required: usize, budget: usize },

    #[error("no admissible decay constant M in the sweep")]
    NoAdmissibleM,

    #[error("series did not converge after {terms} terms (last term norm {last:e})")]
    SeriesNotConverged { terms: usize, last: f64 },

    #[error("degenerate: {0}")]
    Degenerate(String),

    #[error("parse error at column {column}: {message}")]
    Parse { column: usize, message: String },

    #[error("unknown identifier '{0}'")]
    UnknownIdentifier(String),

    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
