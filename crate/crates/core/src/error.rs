use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A mixture model violates one of its construction invariants.
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("index {index} out of range (count {count})")]
    IndexOutOfRange { index: usize, count: usize },

    /// Two fitted centers coincide where the operation needs them distinct.
    #[error("degenerate solution: centers {0} and {1} coincide")]
    DegenerateSolution(usize, usize),

    #[error("separation is undefined for a single-component model")]
    UndefinedSeparation,

    /// The requested estimator cannot evaluate this model.
    #[error("unsupported estimator: {0}")]
    UnsupportedEstimator(String),

    #[error("empty data set")]
    EmptyData,

    #[error("cell {0} received no points")]
    EmptyCell(usize),

    /// The 1D piecewise formulas do not apply (a boundary sits on a ball edge).
    #[error("piecewise regime invalid: {0}")]
    InvalidRegime(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
