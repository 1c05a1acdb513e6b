use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("CSV parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("label column `{0}` not found")]
    MissingLabelColumn(String),

    #[error("requested {k_active} active features but p = {p}")]
    TooManyActive { k_active: usize, p: usize },

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("the squared loss has unbounded coordinate gradients: use clipped mode instead of Lipschitz constants")]
    UnboundedLipschitz,

    #[error("invalid privacy budget (epsilon = {epsilon}, delta = {delta})")]
    InvalidBudget { epsilon: f64, delta: f64 },

    #[error("noise scale is zero: the privacy loss is infinite")]
    InfinitePrivacyLoss,

    #[error("Renyi order {0} is not supported: the subsampled Gaussian bound needs an integer order >= 2")]
    UnsupportedOrder(f64),

    #[error("RDP curves are defined on different alpha grids")]
    GridMismatch,

    #[error("closed-form calibration needs epsilon <= 1 and delta < 1/3, got epsilon = {epsilon}, delta = {delta}")]
    HypothesisViolation { epsilon: f64, delta: f64 },

    #[error("noise calibration failed: {0}")]
    CalibrationFailure(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
