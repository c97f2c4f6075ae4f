use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("ket is not normalized: norm = {norm}")]
    Normalization { norm: f64 },

    #[error("dimension mismatch: {0}")]
    Dim(String),

    #[error("element {index} is not a projector (residual {residual:.3e})")]
    NotProjector { index: usize, residual: f64 },

    #[error("operator is not unitary (residual {residual:.3e})")]
    NotUnitary { residual: f64 },

    #[error("operator is not Hermitian (residual {residual:.3e})")]
    NotHermitian { residual: f64 },

    #[error("operator is not positive (min eigenvalue {min_eigenvalue:.3e})")]
    NotPositive { min_eigenvalue: f64 },

    #[error("elements {first} and {second} are not orthogonal (residual {residual:.3e})")]
    Orthogonality { first: usize, second: usize, residual: f64 },

    #[error("elements do not sum to the identity (residual {residual:.3e})")]
    Completeness { residual: f64 },

    #[error("element {index} is the zero operator")]
    ZeroProjector { index: usize },

    #[error("projective decomposition is empty")]
    EmptyDecomposition,

    #[error("frameworks are incompatible: {0}")]
    IncompatibleFrameworks(String),

    #[error("invalid probability weights: {0}")]
    Weight(String),

    #[error("time grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("family is inconsistent (max off-diagonal residual {residual:.3e}); probabilities are undefined")]
    InconsistentFamily { residual: f64 },

    #[error("conditioning event has zero probability")]
    ZeroCondition,

    #[error("event at time index {time} is not in the event algebra of history {history}")]
    EventNotInFamily { time: usize, history: String },

    #[error("dynamics do not factorize across the subsystem cut (residual {residual:.3e})")]
    Factorization { residual: f64 },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("label {0:?} not found")]
    UnknownLabel(String),
}
