//! Noise calibration from a privacy budget.

use serde::{Deserialize, Serialize};

use super::audit::{AccountantAudit, BudgetAllocation, Mechanism, OPTIMIZER};
use super::rdp::{
    default_alphas, integer_alphas, rdp_gaussian, rdp_subsampled_gaussian, rdp_to_dp,
};
use super::{NoiseScales, PrivacyBudget};
use crate::{Error, Result};

const SEARCH_MIN: f64 = 1e-6;
const SEARCH_MAX: f64 = 1e8;
const SEARCH_RTOL: f64 = 1e-10;

/// Closed-form DP-CD scales `sigma_j = sqrt(12 L_j^2 T K log(1/delta)) / (n epsilon)`.
pub fn calibrate_dpcd_closed_form(
    lipschitz: &[f64],
    outer_iters: u64,
    inner_iters: u64,
    n: usize,
    budget: PrivacyBudget,
) -> Result<NoiseScales> {
    if !budget.satisfies_closed_form_hypotheses() {
        return Err(Error::HypothesisViolation {
            epsilon: budget.epsilon,
            delta: budget.delta,
        });
    }
    let releases = outer_iters * inner_iters;
    if releases == 0 {
        return Err(Error::InvalidConfig("T * K must be at least 1".into()));
    }
    let scale =
        (12.0 * releases as f64 * (1.0 / budget.delta).ln()).sqrt() / (n as f64 * budget.epsilon);
    Ok(NoiseScales(lipschitz.iter().map(|l| l * scale).collect()))
}

/// Noise multiplier `sigma / sensitivity` implied by the closed form:
/// `sqrt(3 T K log(1/delta)) / epsilon`.
pub fn closed_form_noise_multiplier(releases: u64, budget: PrivacyBudget) -> f64 {
    (3.0 * releases as f64 * (1.0 / budget.delta).ln()).sqrt() / budget.epsilon
}

fn alpha_grid(q: Option<f64>) -> (Vec<f64>, &'static str) {
    match q {
        None => (
            default_alphas(),
            "integers 2..=256 and 64 log-spaced orders in (1, 2)",
        ),
        Some(_) => (integer_alphas(), "integers 2..=256"),
    }
}

/// Epsilon at `delta` after `steps` releases at noise multiplier
/// `sigma_bar`, with optional Poisson subsampling at rate `q`. Returns
/// `(epsilon, best_alpha)`.
pub fn achieved_epsilon(
    sigma_bar: f64,
    steps: u64,
    delta: f64,
    q: Option<f64>,
) -> Result<(f64, f64)> {
    let (alphas, _) = alpha_grid(q);
    let per_step = match q {
        None => rdp_gaussian(1.0, sigma_bar, &alphas)?,
        Some(q) => rdp_subsampled_gaussian(q, sigma_bar, &alphas)?,
    };
    Ok(rdp_to_dp(&per_step.repeated(steps), delta))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericCalibration {
    /// `sigma_bar`, the ratio of noise std to per-step sensitivity.
    pub noise_multiplier: f64,
    /// `sensitivity * sigma_bar`.
    pub sigma: f64,
    pub achieved_epsilon: f64,
    pub best_alpha: f64,
    pub audit: AccountantAudit,
}

/// Smallest noise multiplier meeting the budget after `steps` releases,
/// found by bisection on the numerical RDP accountant.
pub fn calibrate_numeric(
    sensitivity_per_step: f64,
    steps: u64,
    budget: PrivacyBudget,
    subsampling_q: Option<f64>,
) -> Result<NumericCalibration> {
    if steps == 0 {
        return Err(Error::InvalidConfig(
            "at least one release is required".into(),
        ));
    }
    let eps_at = |s: f64| achieved_epsilon(s, steps, budget.delta, subsampling_q);
    let feasible = |s: f64| eps_at(s).map(|(e, _)| e <= budget.epsilon);

    let mut hi = 1.0;
    while !feasible(hi)? {
        hi *= 2.0;
        if hi > SEARCH_MAX {
            return Err(Error::CalibrationFailure(format!(
                "epsilon = {} is not reachable with noise multiplier <= {SEARCH_MAX:e} after {steps} steps",
                budget.epsilon
            )));
        }
    }
    let mut lo = hi / 2.0;
    while feasible(lo)? {
        if lo < SEARCH_MIN {
            break;
        }
        hi = lo;
        lo /= 2.0;
    }
    if lo >= SEARCH_MIN {
        while (hi - lo) > SEARCH_RTOL * hi {
            let mid = 0.5 * (lo + hi);
            if feasible(mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }
    let (achieved, best_alpha) = eps_at(hi)?;
    let (_, grid) = alpha_grid(subsampling_q);
    let mechanism = match subsampling_q {
        None => Mechanism::Gaussian,
        Some(sampling_rate) => Mechanism::SubsampledGaussian { sampling_rate },
    };
    let audit = AccountantAudit {
        mechanism,
        releases: steps,
        sensitivities: vec![sensitivity_per_step],
        noise_multiplier: hi,
        alpha_grid: grid.to_string(),
        best_alpha,
        achieved_epsilon: achieved,
        delta: budget.delta,
        budget_epsilon: budget.epsilon,
        allocations: vec![BudgetAllocation {
            purpose: OPTIMIZER.to_string(),
            epsilon: budget.epsilon,
            delta: budget.delta,
        }],
    };
    Ok(NumericCalibration {
        noise_multiplier: hi,
        sigma: sensitivity_per_step * hi,
        achieved_epsilon: achieved,
        best_alpha,
        audit,
    })
}
