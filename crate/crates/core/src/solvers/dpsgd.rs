//! DP-SGD baseline with Poisson-sampled batches and per-sample L2 clipping.

use rand::seq::index;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use super::config::SolverConfig;
use super::Solution;
use crate::objective::Problem;
use crate::privacy::{
    calibrate_numeric, gaussian_sample, AccountantAudit, NumericCalibration, PrivacyBudget,
};
use crate::prox::apply_prox;
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpSgdPlan {
    /// `gamma / beta`.
    pub step_size: f64,
    /// Global smoothness estimate `beta`.
    pub beta: f64,
    /// Poisson sampling rate `q = B / n`.
    pub sampling_rate: f64,
    pub steps: u64,
    pub noise_multiplier: f64,
    /// Per-coordinate noise std `sigma_bar * 2C / B`.
    pub sigma: f64,
    pub audit: AccountantAudit,
}

impl DpSgdPlan {
    fn base<T: Scalar>(
        pb: &Problem<T>,
        cfg: &SolverConfig,
        beta: Option<f64>,
    ) -> Result<(f64, f64, f64, u64)> {
        cfg.validate_dp_sgd(pb.n())?;
        let beta = beta.unwrap_or_else(|| pb.global_smoothness().as_f64());
        let q = cfg.batch_size as f64 / pb.n() as f64;
        let steps = (cfg.passes * cfg.dp_sgd_steps_per_pass(pb.n())) as u64;
        Ok((cfg.step_scale / beta, beta, q, steps))
    }

    /// Calibrates the noise multiplier with subsampled-Gaussian accounting.
    /// `beta` may be passed in to avoid recomputing it across a grid.
    pub fn private<T: Scalar>(
        pb: &Problem<T>,
        cfg: &SolverConfig,
        budget: PrivacyBudget,
        beta: Option<f64>,
    ) -> Result<Self> {
        let (_, _, q, steps) = Self::base(pb, cfg, beta)?;
        let cal = calibrate_numeric(1.0, steps, budget, Some(q))?;
        Self::with_calibration(pb, cfg, &cal, beta)
    }

    /// Reuses a unit-sensitivity calibration for the same step count and rate.
    pub fn with_calibration<T: Scalar>(
        pb: &Problem<T>,
        cfg: &SolverConfig,
        cal: &NumericCalibration,
        beta: Option<f64>,
    ) -> Result<Self> {
        let (step_size, beta, q, steps) = Self::base(pb, cfg, beta)?;
        if !cfg.clip_scale.is_finite() {
            return Err(Error::InvalidConfig(
                "clip scale must be finite for private runs".into(),
            ));
        }
        if cal.audit.releases != steps {
            return Err(Error::InvalidConfig(format!(
                "calibration covers {} steps, the configuration performs {steps}",
                cal.audit.releases
            )));
        }
        let sensitivity = 2.0 * cfg.clip_scale / cfg.batch_size as f64;
        let mut audit = cal.audit.clone();
        audit.sensitivities = vec![sensitivity];
        Ok(Self {
            step_size,
            beta,
            sampling_rate: q,
            steps,
            noise_multiplier: cal.noise_multiplier,
            sigma: cal.noise_multiplier * sensitivity,
            audit,
        })
    }

    pub fn noiseless<T: Scalar>(
        pb: &Problem<T>,
        cfg: &SolverConfig,
        beta: Option<f64>,
    ) -> Result<Self> {
        let (step_size, beta, q, steps) = Self::base(pb, cfg, beta)?;
        Ok(Self {
            step_size,
            beta,
            sampling_rate: q,
            steps,
            noise_multiplier: 0.0,
            sigma: 0.0,
            audit: AccountantAudit::noiseless(pb.p()),
        })
    }
}

pub fn dp_sgd<T: Scalar, R: Rng + ?Sized>(
    pb: &Problem<T>,
    cfg: &SolverConfig,
    plan: &DpSgdPlan,
    rng: &mut R,
) -> Result<Solution<T>> {
    let (n, p) = (pb.n(), pb.p());
    cfg.validate_dp_sgd(n)?;
    let steps_per_pass = cfg.dp_sgd_steps_per_pass(n) as u64;
    if plan.steps != cfg.passes as u64 * steps_per_pass {
        return Err(Error::InvalidConfig(format!(
            "plan covers {} steps, the configuration performs {}",
            plan.steps,
            cfg.passes as u64 * steps_per_pass
        )));
    }
    if plan.sigma > 0.0 && !cfg.clip_scale.is_finite() {
        return Err(Error::InvalidConfig(
            "noisy DP-SGD needs a finite clip scale".into(),
        ));
    }
    let binomial = Binomial::new(n as u64, plan.sampling_rate.clamp(0.0, 1.0))
        .map_err(|e| Error::InvalidConfig(format!("sampling rate: {e}")))?;
    let clip = T::of(cfg.clip_scale);
    let inv_b = T::one() / T::of_usize(cfg.batch_size);
    let gamma = T::of(plan.step_size);
    let reg = pb.regularizer();
    let lambda = pb.reg_strength();

    let mut w = vec![T::zero(); p];
    let mut g = vec![T::zero(); p];
    let mut trace = vec![pb.evaluate(&w).as_f64()];
    let mut diverged = false;
    let mut iterations = 0u64;

    'steps: for step in 1..=plan.steps {
        g.fill(T::zero());
        let m = binomial.sample(rng) as usize;
        for i in index::sample(rng, n, m) {
            // The per-sample gradient is `s x_i`, so its norm is `|s| ||x_i||`.
            let mut s = pb.sample_gradient_scale(i, &w);
            if cfg.clip_scale.is_finite() {
                let norm = s.abs() * pb.row_norm(i);
                if norm > clip {
                    s *= clip / norm;
                }
            }
            for (a, &x) in g.iter_mut().zip(pb.row(i)) {
                *a += s * x;
            }
        }
        for (j, (wj, &gj)) in w.iter_mut().zip(&g).enumerate() {
            let noisy = gj * inv_b + T::of(gaussian_sample(plan.sigma, rng));
            let next = apply_prox(reg, lambda, *wj - gamma * noisy, gamma, j);
            if !next.is_finite() {
                diverged = true;
                break 'steps;
            }
            *wj = next;
        }
        iterations = step;
        if cfg.record_trace && step % steps_per_pass == 0 && step < plan.steps {
            trace.push(pb.evaluate(&w).as_f64());
        }
    }

    let objective = if diverged {
        f64::INFINITY
    } else {
        pb.evaluate(&w).as_f64()
    };
    trace.push(objective);
    Ok(Solution {
        weights: w,
        objective,
        trace,
        iterations,
        diverged,
        noise_scales: vec![plan.sigma; p],
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

    fn quadratic() -> Problem<f64> {
        let d = Dataset::from_rows(
            &[vec![1.0, 0.5], vec![-0.3, 2.0], vec![0.7, 0.1]],
            vec![1.0, -2.0, 0.5],
        )
        .unwrap();
        Problem::new(d, Loss::SquaredError, Regularizer::None, 0.0).unwrap()
    }

    #[test]
    fn full_batch_noiseless_descends() {
        let pb = quadratic();
        let cfg = SolverConfig::dp_sgd(1.0, f64::INFINITY, 30, 3);
        let plan = DpSgdPlan::noiseless(&pb, &cfg, None).unwrap();
        assert_eq!(plan.sampling_rate, 1.0);
        let sol = dp_sgd(&pb, &cfg, &plan, &mut seeded(3)).unwrap();
        assert_eq!(sol.trace.len(), 31);
        for w in sol.trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{:?}", sol.trace);
        }
    }

    #[test]
    fn private_plan_is_audited() {
        let pb = quadratic();
        let cfg = SolverConfig::dp_sgd(0.1, 1.0, 2, 1);
        let budget = PrivacyBudget::new(1.0, 1e-3).unwrap();
        let plan = DpSgdPlan::private(&pb, &cfg, budget, None).unwrap();
        assert_eq!(plan.steps, 6);
        assert!(plan.audit.within_budget());
        assert!((plan.sigma - plan.noise_multiplier * 2.0).abs() < 1e-15);
        let sol = dp_sgd(&pb, &cfg, &plan, &mut seeded(1)).unwrap();
        assert_eq!(sol.iterations, 6);
        assert_eq!(sol.trace.len(), 3);
    }

    #[test]
    fn infinite_clip_with_noise_is_rejected() {
        let pb = quadratic();
        let cfg = SolverConfig::dp_sgd(0.1, 1.0, 1, 1);
        let budget = PrivacyBudget::new(1.0, 1e-3).unwrap();
        let plan = DpSgdPlan::private(&pb, &cfg, budget, None).unwrap();
        let unclipped = SolverConfig::dp_sgd(0.1, f64::INFINITY, 1, 1);
        assert!(dp_sgd(&pb, &unclipped, &plan, &mut seeded(1)).is_err());
        assert!(DpSgdPlan::private(&pb, &unclipped, budget, None).is_err());
    }

    #[test]
    fn divergence_is_flagged() {
        let pb = quadratic();
        let cfg = SolverConfig::dp_sgd(1e200, f64::INFINITY, 50, 3);
        let plan = DpSgdPlan::noiseless(&pb, &cfg, None).unwrap();
        let sol = dp_sgd(&pb, &cfg, &plan, &mut seeded(1)).unwrap();
        assert!(sol.diverged);
        assert_eq!(sol.objective, f64::INFINITY);
    }
}
