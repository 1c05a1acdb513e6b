//! Private and non-private solvers for composite ERM.

mod clip;
mod config;
mod dpcd;
mod dpsgd;
mod reference;

pub use clip::{clip_l2, clip_scalar, coordinate_thresholds};
pub use config::{ClipMode, Schedule, SolverConfig};
pub use dpcd::{dp_cd, dp_cd_observed, Calibration, DpCdPlan};
pub use dpsgd::{dp_sgd, DpSgdPlan};
pub use reference::{reference_solve, ReferenceSolution, DEFAULT_TOL};

use serde::{Deserialize, Serialize};

use crate::privacy::AccountantAudit;

/// Output of a solver run. The audit is mandatory: plans can only be built
/// by calibrating against a budget or explicitly as noiseless.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution<T> {
    pub weights: Vec<T>,
    /// `F` at the returned point.
    pub objective: f64,
    /// `F` at the initial point and after every pass when tracing is on,
    /// otherwise initial and final values only.
    pub trace: Vec<f64>,
    pub iterations: u64,
    /// A non-finite iterate was produced and the run stopped early.
    pub diverged: bool,
    pub noise_scales: Vec<f64>,
    pub audit: AccountantAudit,
    pub config: SolverConfig,
}
