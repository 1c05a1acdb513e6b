//! Noise mechanisms, Renyi-DP accounting and noise calibration.
//!
//! All accounting runs in `f64` regardless of the scalar type used by the
//! optimizers.

mod audit;
mod calibration;
mod mechanisms;
mod rdp;

pub use audit::{AccountantAudit, BudgetAllocation, Mechanism};
pub use calibration::{
    achieved_epsilon, calibrate_dpcd_closed_form, calibrate_numeric, closed_form_noise_multiplier,
    NumericCalibration,
};
pub use mechanisms::{gaussian_sample, laplace_sample};
pub use rdp::{
    compose, default_alphas, gaussian_epsilon_continuous, integer_alphas, rdp_gaussian,
    rdp_subsampled_gaussian, rdp_to_dp, RdpCurve,
};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// An `(epsilon, delta)` target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyBudget {
    pub epsilon: f64,
    pub delta: f64,
}

impl PrivacyBudget {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() || !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidBudget { epsilon, delta });
        }
        Ok(Self { epsilon, delta })
    }

    /// Hypotheses of the closed-form DP-CD calibration.
    pub fn satisfies_closed_form_hypotheses(&self) -> bool {
        self.epsilon <= 1.0 && self.delta < 1.0 / 3.0
    }

    /// Splits off a fraction `rho` of epsilon for a pure-DP sub-task. Returns
    /// `(pure_epsilon, remaining_budget)`; delta stays with the remainder.
    pub fn split(&self, rho: f64) -> Result<(f64, PrivacyBudget)> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "budget fraction must lie in (0, 1), got {rho}"
            )));
        }
        let pure = rho * self.epsilon;
        Ok((pure, PrivacyBudget::new(self.epsilon - pure, self.delta)?))
    }
}

/// Per-coordinate Gaussian standard deviations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseScales(pub Vec<f64>);

impl NoiseScales {
    pub fn zeros(p: usize) -> Self {
        Self(vec![0.0; p])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}
