use thiserror::Error;

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] dpcd_core::Error),

    #[error("tuning failed for {algorithm}: all {cells} grid cells diverged ({diagnostics})")]
    TuningFailure {
        algorithm: String,
        cells: usize,
        diagnostics: String,
    },

    #[error("invalid experiment: {0}")]
    InvalidSpec(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<HarnessError>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    ThreadPool(#[from] rayon::ThreadPoolBuildError),
}

impl HarnessError {
    /// Stable machine-readable name of the innermost error.
    pub fn kind(&self) -> &'static str {
        use dpcd_core::Error as E;
        match self {
            HarnessError::Core(e) => match e {
                E::InvalidDataset(_) => "invalid_dataset",
                E::Parse { .. } => "parse",
                E::MissingLabelColumn(_) => "missing_label_column",
                E::TooManyActive { .. } => "too_many_active",
                E::InvalidProblem(_) => "invalid_problem",
                E::UnboundedLipschitz => "unbounded_lipschitz",
                E::InvalidBudget { .. } => "invalid_budget",
                E::InfinitePrivacyLoss => "infinite_privacy_loss",
                E::UnsupportedOrder(_) => "unsupported_order",
                E::GridMismatch => "grid_mismatch",
                E::HypothesisViolation { .. } => "hypothesis_violation",
                E::CalibrationFailure(_) => "calibration_failure",
                E::DimensionMismatch { .. } => "dimension_mismatch",
                E::InvalidConfig(_) => "invalid_config",
                E::Io(_) => "io",
                E::Csv(_) => "csv",
            },
            HarnessError::TuningFailure { .. } => "tuning_failure",
            HarnessError::InvalidSpec(_) => "invalid_spec",
            HarnessError::Context { source, .. } => source.kind(),
            HarnessError::Io(_) => "io",
            HarnessError::Json(_) => "json",
            HarnessError::Csv(_) => "csv",
            HarnessError::ThreadPool(_) => "thread_pool",
        }
    }
}

pub trait Context<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T>;
}

impl<T, E: Into<HarnessError>> Context<T> for std::result::Result<T, E> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T> {
        self.map_err(|e| HarnessError::Context {
            context: what(),
            source: Box::new(e.into()),
        })
    }
}
