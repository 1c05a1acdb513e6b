use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// How coordinate-gradient sensitivities are bounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClipMode {
    /// Per-sample Lipschitz constants of the loss; no clipping.
    TheoryLipschitz,
    /// Per-sample gradient clipping at thresholds derived from the clip scale.
    Clipped,
}

/// Split of the DP-CD iteration budget into `T` outer and `K` inner loops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    /// `T = 1`, `K = passes * p`.
    #[default]
    Convex,
    /// `T = passes`, `K = p`.
    StronglyConvex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// `gamma`: DP-CD steps are `gamma / M_j`, DP-SGD steps `gamma / beta`.
    pub step_scale: f64,
    /// `C`; `inf` disables clipping.
    pub clip_scale: f64,
    pub passes: usize,
    pub inner_iters: usize,
    pub outer_iters: usize,
    /// Expected batch size (DP-SGD only).
    pub batch_size: usize,
    pub seed: u64,
    pub mode: ClipMode,
    #[serde(default = "yes")]
    pub record_trace: bool,
}

fn yes() -> bool {
    true
}

impl SolverConfig {
    pub fn dp_cd(
        step_scale: f64,
        clip_scale: f64,
        passes: usize,
        p: usize,
        schedule: Schedule,
    ) -> Self {
        let (outer_iters, inner_iters) = match schedule {
            Schedule::Convex => (1, passes * p),
            Schedule::StronglyConvex => (passes, p),
        };
        Self {
            step_scale,
            clip_scale,
            passes,
            inner_iters,
            outer_iters,
            batch_size: 1,
            seed: 0,
            mode: ClipMode::Clipped,
            record_trace: true,
        }
    }

    pub fn dp_sgd(step_scale: f64, clip_scale: f64, passes: usize, batch_size: usize) -> Self {
        Self {
            step_scale,
            clip_scale,
            passes,
            inner_iters: 0,
            outer_iters: 0,
            batch_size,
            seed: 0,
            mode: ClipMode::Clipped,
            record_trace: true,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_mode(mut self, mode: ClipMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_trace(mut self, record: bool) -> Self {
        self.record_trace = record;
        self
    }

    /// Total number of gradient releases `T * K`.
    pub fn dp_cd_releases(&self) -> u64 {
        (self.outer_iters * self.inner_iters) as u64
    }

    pub fn dp_sgd_steps_per_pass(&self, n: usize) -> usize {
        n.div_ceil(self.batch_size)
    }

    fn check_scales(&self) -> Result<()> {
        if !(self.step_scale > 0.0) || !self.step_scale.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "step scale must be positive, got {}",
                self.step_scale
            )));
        }
        if !(self.clip_scale > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "clip scale must be positive, got {}",
                self.clip_scale
            )));
        }
        Ok(())
    }

    pub fn validate_dp_cd(&self, p: usize) -> Result<()> {
        self.check_scales()?;
        if self.outer_iters == 0 || self.inner_iters == 0 {
            return Err(Error::InvalidConfig("T and K must be positive".into()));
        }
        if self.outer_iters * self.inner_iters != self.passes * p {
            return Err(Error::InvalidConfig(format!(
                "T * K = {} does not match passes * p = {}",
                self.outer_iters * self.inner_iters,
                self.passes * p
            )));
        }
        Ok(())
    }

    pub fn validate_dp_sgd(&self, n: usize) -> Result<()> {
        self.check_scales()?;
        if self.passes == 0 {
            return Err(Error::InvalidConfig("at least one pass is required".into()));
        }
        if self.batch_size == 0 || self.batch_size > n {
            return Err(Error::InvalidConfig(format!(
                "batch size must lie in 1..={n}, got {}",
                self.batch_size
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedules_cover_passes() {
        let c = SolverConfig::dp_cd(1.0, 1.0, 5, 8, Schedule::Convex);
        assert_eq!((c.outer_iters, c.inner_iters), (1, 40));
        c.validate_dp_cd(8).unwrap();
        let s = SolverConfig::dp_cd(1.0, 1.0, 5, 8, Schedule::StronglyConvex);
        assert_eq!((s.outer_iters, s.inner_iters), (5, 8));
        assert_eq!(s.dp_cd_releases(), 40);
        assert!(s.validate_dp_cd(9).is_err());
    }

    #[test]
    fn rejects_bad_scales() {
        assert!(SolverConfig::dp_cd(0.0, 1.0, 1, 2, Schedule::Convex)
            .validate_dp_cd(2)
            .is_err());
        assert!(SolverConfig::dp_cd(1.0, -1.0, 1, 2, Schedule::Convex)
            .validate_dp_cd(2)
            .is_err());
        assert!(SolverConfig::dp_sgd(1.0, 1.0, 1, 0)
            .validate_dp_sgd(10)
            .is_err());
        assert!(SolverConfig::dp_sgd(1.0, 1.0, 1, 11)
            .validate_dp_sgd(10)
            .is_err());
        assert_eq!(
            SolverConfig::dp_sgd(1.0, 1.0, 1, 3).dp_sgd_steps_per_pass(10),
            4
        );
    }
}
