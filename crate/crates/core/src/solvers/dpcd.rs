//! Differentially private proximal coordinate descent.
//!
//! Outer loop `t = 0..T`: restart from the running average `w_t`. Inner loop
//! `k = 0..K`: pick `j` uniformly, release `grad_j f(theta) + eta_j` with
//! `eta_j ~ N(0, sigma_j^2)` and take the proximal step
//! `theta_j <- prox_{gamma_j psi_j}(theta_j - gamma_j (grad_j f(theta) + eta_j))`.
//! The next outer point is `(1/K) sum_{k=1..K} theta^k`; `theta^0` is not
//! part of the average.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::clip::coordinate_thresholds;
use super::config::{ClipMode, SolverConfig};
use super::Solution;
use crate::objective::{Problem, ResidualState, SmoothnessVector};
use crate::privacy::{
    achieved_epsilon, calibrate_dpcd_closed_form, calibrate_numeric, gaussian_sample,
    AccountantAudit, NoiseScales, NumericCalibration, PrivacyBudget,
};
use crate::prox::apply_prox;
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Calibration {
    /// Bisection on the RDP accountant.
    #[default]
    Numeric,
    /// `sigma_j^2 = 12 L_j^2 T K log(1/delta) / (n epsilon)^2`, re-audited numerically.
    ClosedForm,
}

/// Everything DP-CD needs besides the data: step sizes, clipping thresholds
/// and calibrated noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpCdPlan {
    pub step_sizes: Vec<f64>,
    /// `C_j` in clipped mode; `inf` in theory mode.
    pub thresholds: Vec<f64>,
    /// Sensitivity of one coordinate release, `2 C_j / n` or `2 L_j / n`.
    pub sensitivities: Vec<f64>,
    pub noise: NoiseScales,
    pub audit: AccountantAudit,
}

fn to_f64<T: Scalar>(v: &[T]) -> Vec<f64> {
    v.iter().map(|x| x.as_f64()).collect()
}

impl DpCdPlan {
    fn base<T: Scalar>(
        pb: &Problem<T>,
        cfg: &SolverConfig,
        smoothness: &SmoothnessVector<T>,
    ) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let p = pb.p();
        cfg.validate_dp_cd(p)?;
        if smoothness.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                got: smoothness.len(),
            });
        }
        let step_sizes: Vec<f64> = smoothness
            .as_slice()
            .iter()
            .map(|m| cfg.step_scale / m.as_f64())
            .collect();
        let n = pb.n() as f64;
        let (thresholds, sensitivities) = match cfg.mode {
            ClipMode::Clipped => {
                let th = to_f64(&coordinate_thresholds(smoothness, T::of(cfg.clip_scale)));
                let sens = th.iter().map(|c| 2.0 * c / n).collect();
                (th, sens)
            }
            ClipMode::TheoryLipschitz => {
                let l = pb.lipschitz_constants()?;
                let sens = l.as_slice().iter().map(|l| 2.0 * l.as_f64() / n).collect();
                (vec![f64::INFINITY; p], sens)
            }
        };
        Ok((step_sizes, thresholds, sensitivities))
    }

    /// Calibrates noise for `T * K` coordinate releases under `budget`.
    pub fn private<T: Scalar>(
        pb: &Problem<T>,
        cfg: &SolverConfig,
        smoothness: &SmoothnessVector<T>,
        budget: PrivacyBudget,
        calibration: Calibration,
    ) -> Result<Self> {
        let (step_sizes, thresholds, sensitivities) = Self::base(pb, cfg, smoothness)?;
        if sensitivities.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidConfig(
                "clip scale must be finite for private runs".into(),
            ));
        }
        let releases = cfg.dp_cd_releases();
        let cal = calibrate_numeric(1.0, releases, budget, None)?;
        let (noise, audit) = match calibration {
            Calibration::Numeric => return Self::with_calibration(pb, cfg, smoothness, &cal),
            Calibration::ClosedForm => {
                // Lipschitz bounds L_j = n * sensitivity_j / 2.
                let l: Vec<f64> = sensitivities
                    .iter()
                    .map(|s| s * pb.n() as f64 / 2.0)
                    .collect();
                let noise = calibrate_dpcd_closed_form(
                    &l,
                    cfg.outer_iters as u64,
                    cfg.inner_iters as u64,
                    pb.n(),
                    budget,
                )?;
                let multiplier = noise
                    .as_slice()
                    .iter()
                    .zip(&sensitivities)
                    .map(|(s, d)| s / d)
                    .fold(f64::INFINITY, f64::min);
                let (eps, alpha) = achieved_epsilon(multiplier, releases, budget.delta, None)?;
                let mut audit = cal.audit;
                audit.sensitivities = sensitivities.clone();
                audit.noise_multiplier = multiplier;
                audit.achieved_epsilon = eps;
                audit.best_alpha = alpha;
                (noise, audit)
            }
        };
        Ok(Self {
            step_sizes,
            thresholds,
            sensitivities,
            noise,
            audit,
        })
    }

    /// Scales a unit-sensitivity numeric calibration to the per-coordinate
    /// sensitivities. The noise multiplier depends only on the number of
    /// releases and the budget, so one calibration serves a whole grid.
    pub fn with_calibration<T: Scalar>(
        pb: &Problem<T>,
        cfg: &SolverConfig,
        smoothness: &SmoothnessVector<T>,
        cal: &NumericCalibration,
    ) -> Result<Self> {
        let (step_sizes, thresholds, sensitivities) = Self::base(pb, cfg, smoothness)?;
        if sensitivities.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidConfig(
                "clip scale must be finite for private runs".into(),
            ));
        }
        if cal.audit.releases != cfg.dp_cd_releases() {
            return Err(Error::InvalidConfig(format!(
                "calibration covers {} releases, the configuration performs {}",
                cal.audit.releases,
                cfg.dp_cd_releases()
            )));
        }
        let noise = NoiseScales(
            sensitivities
                .iter()
                .map(|s| s * cal.noise_multiplier)
                .collect(),
        );
        let mut audit = cal.audit.clone();
        audit.sensitivities = sensitivities.clone();
        Ok(Self {
            step_sizes,
            thresholds,
            sensitivities,
            noise,
            audit,
        })
    }

    /// No noise: for convergence checks and reference runs.
    pub fn noiseless<T: Scalar>(
        pb: &Problem<T>,
        cfg: &SolverConfig,
        smoothness: &SmoothnessVector<T>,
    ) -> Result<Self> {
        let (step_sizes, thresholds, sensitivities) = Self::base(pb, cfg, smoothness)?;
        Ok(Self {
            step_sizes,
            thresholds,
            sensitivities,
            noise: NoiseScales::zeros(pb.p()),
            audit: AccountantAudit::noiseless(pb.p()),
        })
    }

    /// Replaces the noise with caller-provided scales and their audit.
    pub fn with_noise(mut self, noise: NoiseScales, audit: AccountantAudit) -> Result<Self> {
        if noise.len() != self.step_sizes.len() {
            return Err(Error::DimensionMismatch {
                expected: self.step_sizes.len(),
                got: noise.len(),
            });
        }
        self.noise = noise;
        self.audit = audit;
        Ok(self)
    }
}

pub fn dp_cd<T: Scalar, R: Rng + ?Sized>(
    pb: &Problem<T>,
    cfg: &SolverConfig,
    plan: &DpCdPlan,
    rng: &mut R,
) -> Result<Solution<T>> {
    dp_cd_observed(pb, cfg, plan, rng, |_, _| {})
}

/// Lazily accumulated sum of the inner iterates `theta^1..theta^K`.
struct IterateSum<T> {
    sum: Vec<T>,
    /// First iterate index from which the current value of `theta_j` holds.
    since: Vec<usize>,
}

impl<T: Scalar> IterateSum<T> {
    fn new(p: usize) -> Self {
        Self {
            sum: vec![T::zero(); p],
            since: vec![1; p],
        }
    }

    fn reset(&mut self) {
        self.sum.fill(T::zero());
        self.since.fill(1);
    }

    /// `theta_j` changes from `old` when producing iterate `k + 1`.
    #[inline]
    fn record(&mut self, j: usize, k: usize, old: T) {
        let held = k + 1 - self.since[j];
        if held > 0 {
            self.sum[j] += old * T::of_usize(held);
        }
        self.since[j] = k + 1;
    }

    /// Average of `theta^1..theta^count` given current values `theta`.
    fn average(&self, theta: &[T], count: usize) -> Vec<T> {
        let c = T::of_usize(count);
        self.sum
            .iter()
            .zip(theta)
            .zip(&self.since)
            .map(|((&s, &v), &since)| (s + v * T::of_usize(count + 1 - since)) / c)
            .collect()
    }
}

/// DP-CD calling `observer(iteration, state)` after every inner step.
pub fn dp_cd_observed<T, R, F>(
    pb: &Problem<T>,
    cfg: &SolverConfig,
    plan: &DpCdPlan,
    rng: &mut R,
    mut observer: F,
) -> Result<Solution<T>>
where
    T: Scalar,
    R: Rng + ?Sized,
    F: FnMut(u64, &ResidualState<T>),
{
    let p = pb.p();
    cfg.validate_dp_cd(p)?;
    for len in [
        plan.noise.len(),
        plan.step_sizes.len(),
        plan.thresholds.len(),
    ] {
        if len != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                got: len,
            });
        }
    }
    if plan.audit.is_private() && plan.audit.releases != cfg.dp_cd_releases() {
        return Err(Error::InvalidConfig(format!(
            "noise was calibrated for {} releases, the configuration performs {}",
            plan.audit.releases,
            cfg.dp_cd_releases()
        )));
    }
    let steps: Vec<T> = plan.step_sizes.iter().map(|&g| T::of(g)).collect();
    let thresholds: Vec<T> = plan.thresholds.iter().map(|&c| T::of(c)).collect();
    let sigmas = plan.noise.as_slice();
    let clipped = cfg.mode == ClipMode::Clipped;
    let reg = pb.regularizer();
    let lambda = pb.reg_strength();

    let mut st = pb.zero_state();
    let mut trace = vec![pb.evaluate_state(&st).as_f64()];
    let mut sums = IterateSum::new(p);
    let mut iteration = 0u64;
    let mut diverged = false;
    let mut w_bar = st.weights().to_vec();

    'outer: for t in 0..cfg.outer_iters {
        if t > 0 {
            pb.reset_state(&mut st, &w_bar);
            sums.reset();
        }
        for k in 0..cfg.inner_iters {
            let j = rng.random_range(0..p);
            let g = if clipped {
                pb.clipped_grad_coord(&st, j, thresholds[j])
            } else {
                pb.grad_coord(&st, j)
            };
            let eta = T::of(gaussian_sample(sigmas[j], rng));
            let old = st.weights()[j];
            let new = apply_prox(reg, lambda, old - steps[j] * (g + eta), steps[j], j);
            if !new.is_finite() {
                diverged = true;
                break 'outer;
            }
            if new != old {
                sums.record(j, k, old);
                pb.update_state(&mut st, j, new - old);
            }
            iteration += 1;
            observer(iteration, &st);

            if cfg.record_trace && iteration % p as u64 == 0 && iteration < cfg.dp_cd_releases() {
                let partial = sums.average(st.weights(), k + 1);
                trace.push(pb.evaluate(&partial).as_f64());
            }
        }
        w_bar = sums.average(st.weights(), cfg.inner_iters);
    }

    let objective = if diverged {
        f64::INFINITY
    } else {
        pb.evaluate(&w_bar).as_f64()
    };
    trace.push(objective);
    Ok(Solution {
        weights: w_bar,
        objective,
        trace,
        iterations: iteration,
        diverged,
        noise_scales: plan.noise.0.clone(),
        audit: plan.audit.clone(),
        config: cfg.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Dataset;
    use crate::objective::{Loss, Regularizer};
    use crate::rng::seeded;
    use crate::solvers::Schedule;

    #[test]
    fn iterate_sum_matches_explicit_average() {
        let mut rng = seeded(1);
        let p = 4;
        let k_total = 25;
        let mut theta = vec![0.3, -1.0, 2.0, 0.0];
        let mut sums = IterateSum::<f64>::new(p);
        let mut explicit = vec![0.0; p];
        for k in 0..k_total {
            let j = rng.random_range(0..p);
            let old = theta[j];
            let new = old + rng.random_range(-1.0..1.0);
            sums.record(j, k, old);
            theta[j] = new;
            for (e, t) in explicit.iter_mut().zip(&theta) {
                *e += t;
            }
        }
        let avg = sums.average(&theta, k_total);
        for (a, e) in avg.iter().zip(&explicit) {
            assert!((a - e / k_total as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn one_dimensional_exact_step() {
        // f(w) = (w - 3)^2, M = 2: a single step of size 1/M lands on 3.
        let d = Dataset::from_rows(&[vec![1.0]], vec![3.0]).unwrap();
        let pb = Problem::new(d, Loss::SquaredError, Regularizer::None, 0.0).unwrap();
        let m = pb.smoothness_constants();
        let cfg = SolverConfig::dp_cd(1.0, f64::INFINITY, 1, 1, Schedule::Convex);
        let plan = DpCdPlan::noiseless(&pb, &cfg, &m).unwrap();
        let sol = dp_cd(&pb, &cfg, &plan, &mut seeded(0)).unwrap();
        assert_eq!(sol.weights, vec![3.0]);
        assert_eq!(sol.objective, 0.0);
        assert_eq!(sol.trace.len(), 2);
    }

    #[test]
    fn rejects_mismatched_noise() {
        let d = Dataset::from_rows(&[vec![1.0, 2.0]], vec![3.0]).unwrap();
        let pb = Problem::new(d, Loss::SquaredError, Regularizer::None, 0.0).unwrap();
        let m = pb.smoothness_constants();
        let cfg = SolverConfig::dp_cd(1.0, 1.0, 1, 2, Schedule::Convex);
        let plan = DpCdPlan::noiseless(&pb, &cfg, &m).unwrap();
        assert!(plan
            .clone()
            .with_noise(NoiseScales(vec![0.0]), AccountantAudit::noiseless(2))
            .is_err());
        let mut bad = plan;
        bad.noise = NoiseScales(vec![0.0; 3]);
        assert!(matches!(
            dp_cd(&pb, &cfg, &bad, &mut seeded(0)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn refuses_release_count_mismatch() {
        let d = Dataset::from_rows(&[vec![1.0, 2.0], vec![0.5, -1.0]], vec![3.0, 1.0]).unwrap();
        let pb = Problem::new(d, Loss::SquaredError, Regularizer::None, 0.0).unwrap();
        let m = pb.smoothness_constants();
        let budget = PrivacyBudget::new(1.0, 1e-3).unwrap();
        let cfg = SolverConfig::dp_cd(1.0, 1.0, 2, 2, Schedule::Convex);
        let plan = DpCdPlan::private(&pb, &cfg, &m, budget, Calibration::Numeric).unwrap();
        let other = SolverConfig::dp_cd(1.0, 1.0, 3, 2, Schedule::Convex);
        assert!(dp_cd(&pb, &other, &plan, &mut seeded(0)).is_err());
    }

    #[test]
    fn theory_mode_refuses_squared_loss() {
        let d = Dataset::from_rows(&[vec![1.0]], vec![3.0]).unwrap();
        let pb = Problem::new(d, Loss::SquaredError, Regularizer::None, 0.0).unwrap();
        let cfg = SolverConfig::dp_cd(1.0, 1.0, 1, 1, Schedule::Convex)
            .with_mode(ClipMode::TheoryLipschitz);
        let budget = PrivacyBudget::new(1.0, 1e-3).unwrap();
        assert!(matches!(
            DpCdPlan::private(
                &pb,
                &cfg,
                &pb.smoothness_constants(),
                budget,
                Calibration::Numeric
            ),
            Err(Error::UnboundedLipschitz)
        ));
    }
}
