use serde::{Deserialize, Serialize};

use super::PrivacyBudget;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Mechanism {
    /// No noise: carries no privacy guarantee.
    Noiseless,
    Gaussian,
    SubsampledGaussian {
        sampling_rate: f64,
    },
}

/// A slice of the budget spent outside the Gaussian releases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetAllocation {
    pub purpose: String,
    pub epsilon: f64,
    pub delta: f64,
}

/// Privacy bookkeeping of one private run.
///
/// Guarantees hold for the release of every intermediate iterate, so
/// `releases` counts every noisy gradient query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccountantAudit {
    pub mechanism: Mechanism,
    pub releases: u64,
    /// Per-coordinate (DP-CD) or global (DP-SGD) sensitivity of one release.
    pub sensitivities: Vec<f64>,
    pub noise_multiplier: f64,
    pub alpha_grid: String,
    pub best_alpha: f64,
    /// Epsilon of the Gaussian releases at `delta`.
    pub achieved_epsilon: f64,
    pub delta: f64,
    /// Budget the whole run was given.
    pub budget_epsilon: f64,
    /// Every slice of the budget, including the Gaussian releases.
    pub allocations: Vec<BudgetAllocation>,
}

impl AccountantAudit {
    pub fn noiseless(p: usize) -> Self {
        Self {
            mechanism: Mechanism::Noiseless,
            releases: 0,
            sensitivities: vec![0.0; p],
            noise_multiplier: 0.0,
            alpha_grid: String::new(),
            best_alpha: f64::NAN,
            achieved_epsilon: f64::INFINITY,
            delta: 0.0,
            budget_epsilon: f64::INFINITY,
            allocations: Vec::new(),
        }
    }

    pub fn is_private(&self) -> bool {
        self.mechanism != Mechanism::Noiseless
    }

    /// Epsilon spent by the Gaussian releases plus every pure-DP allocation.
    pub fn total_epsilon(&self) -> f64 {
        self.achieved_epsilon
            + self
                .allocations
                .iter()
                .filter(|a| a.purpose != OPTIMIZER)
                .map(|a| a.epsilon)
                .sum::<f64>()
    }

    /// Sum of the allocated slices; equals the run's budget.
    pub fn allocated_epsilon(&self) -> f64 {
        self.allocations.iter().map(|a| a.epsilon).sum()
    }

    /// Total spend is at most the budget, up to the rounding of adding the
    /// allocated slices back together.
    pub fn within_budget(&self) -> bool {
        self.total_epsilon() <= self.budget_epsilon * (1.0 + 4.0 * f64::EPSILON)
    }

    /// Records a pure-DP spend made before the optimizer ran; `total` becomes
    /// the run's budget.
    pub fn with_pure_spend(mut self, purpose: &str, epsilon: f64, total: PrivacyBudget) -> Self {
        self.allocations.insert(
            0,
            BudgetAllocation {
                purpose: purpose.to_string(),
                epsilon,
                delta: 0.0,
            },
        );
        self.budget_epsilon = total.epsilon;
        self
    }
}

pub(crate) const OPTIMIZER: &str = "optimizer";
