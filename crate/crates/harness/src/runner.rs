//! Prepared experiments: the problem, its reference optimum and cached noise
//! calibrations, ready to run any grid cell.

use std::collections::BTreeMap;

use dpcd_core::estimation::{default_bounds, private_smoothness};
use dpcd_core::privacy::{calibrate_numeric, NumericCalibration};
use dpcd_core::rng::{derive_seed, seeded};
use dpcd_core::solvers::{
    dp_cd, dp_sgd, reference_solve, Calibration, DpCdPlan, DpSgdPlan, ReferenceSolution,
};
use dpcd_core::{FeatureBounds, PrivacyBudget, Problem, SmoothnessVector, Solution, SolverConfig};
use serde::Serialize;

use crate::error::{Context, Result};
use crate::spec::{build_problem, Algorithm, AlgorithmSpec, DatasetInfo, ExperimentSpec};

pub const ESTIMATION_PURPOSE: &str = "smoothness_estimation";

/// One point of an algorithm's grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cell {
    pub step: f64,
    pub clip: f64,
    pub passes: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReferenceSummary {
    pub objective: f64,
    pub cycles: usize,
    pub converged: bool,
}

pub struct Experiment {
    pub spec: ExperimentSpec,
    pub problem: Problem,
    pub info: DatasetInfo,
    pub reference: ReferenceSolution<f64>,
    pub budget: PrivacyBudget,
    smoothness: SmoothnessVector,
    /// Bounds `b_j` on per-sample smoothness constants for private estimation.
    estimation_bounds: Vec<f64>,
    beta: Option<f64>,
}

impl Experiment {
    pub fn prepare(spec: ExperimentSpec) -> Result<Self> {
        spec.validate()?;
        let (problem, info) = build_problem(&spec)?;
        let n = problem.n() as f64;
        let delta = spec.budget.delta.unwrap_or(1.0 / (n * n));
        let budget = PrivacyBudget::new(spec.budget.epsilon, delta)?;
        let reference =
            reference_solve(&problem, spec.reference_tol).context(|| "reference solve".into())?;
        let smoothness = problem.smoothness_constants();
        let fb = FeatureBounds {
            max_abs: crate::spec::problem_bounds(&problem),
        };
        let estimation_bounds = default_bounds(&fb, problem.loss());
        let beta = spec
            .algorithms
            .iter()
            .any(|a| a.kind == Algorithm::DpSgd)
            .then(|| problem.global_smoothness());
        Ok(Self {
            spec,
            problem,
            info,
            reference,
            budget,
            smoothness,
            estimation_bounds,
            beta,
        })
    }

    pub fn reference_summary(&self) -> ReferenceSummary {
        ReferenceSummary {
            objective: self.reference.objective,
            cycles: self.reference.cycles,
            converged: self.reference.converged,
        }
    }

    pub fn smoothness(&self) -> &SmoothnessVector {
        &self.smoothness
    }

    /// Epsilon spent on smoothness estimation and budget left to the
    /// optimizer of `algo`.
    pub fn optimizer_budget(&self, algo: Algorithm) -> Result<(f64, PrivacyBudget)> {
        Ok(match algo {
            Algorithm::DpCdPrivCst => self.budget.split(self.spec.smoothness_fraction)?,
            _ => (0.0, self.budget),
        })
    }

    /// Calibrates the noise multiplier once per pass count.
    pub fn runner(&self, algo: &AlgorithmSpec) -> Result<Runner<'_>> {
        let grid = self.spec.algorithm_grid(algo);
        let (estimation_epsilon, budget) = self.optimizer_budget(algo.kind)?;
        let (n, p) = (self.problem.n(), self.problem.p());
        let mut calibrations = BTreeMap::new();
        for &passes in &grid.passes {
            let cal = match algo.kind {
                Algorithm::DpSgd => {
                    let b = self.spec.batch_size.max(1);
                    let steps = (passes * n.div_ceil(b)) as u64;
                    calibrate_numeric(1.0, steps, budget, Some(b as f64 / n as f64))
                }
                _ => calibrate_numeric(1.0, (passes * p) as u64, budget, None),
            }
            .context(|| format!("calibrating {} at {passes} passes", algo.kind))?;
            calibrations.insert(passes, cal);
        }
        Ok(Runner {
            exp: self,
            algorithm: algo.kind,
            budget,
            estimation_epsilon,
            calibrations,
        })
    }

    /// Seed of one run: phase 0 is tuning, phase 1 evaluation.
    pub fn run_seed(&self, algo: Algorithm, phase: u64, index: u64, rep: u64) -> u64 {
        derive_seed(self.spec.base_seed, &[algo.id(), phase, index, rep])
    }
}

/// Runs grid cells of one algorithm.
pub struct Runner<'a> {
    exp: &'a Experiment,
    pub algorithm: Algorithm,
    /// Budget of the optimizer (after any estimation spend).
    pub budget: PrivacyBudget,
    pub estimation_epsilon: f64,
    calibrations: BTreeMap<usize, NumericCalibration>,
}

impl Runner<'_> {
    pub fn noise_multiplier(&self, passes: usize) -> Option<f64> {
        self.calibrations.get(&passes).map(|c| c.noise_multiplier)
    }

    pub fn run(&self, cell: Cell, seed: u64, trace: bool) -> Result<Solution> {
        let exp = self.exp;
        let pb = &exp.problem;
        let spec = &exp.spec;
        let cal = self.calibrations.get(&cell.passes);
        let mut rng = seeded(seed);
        match self.algorithm {
            Algorithm::DpCd | Algorithm::DpCdPrivCst => {
                let cfg =
                    SolverConfig::dp_cd(cell.step, cell.clip, cell.passes, pb.p(), spec.schedule)
                        .with_seed(seed)
                        .with_trace(trace);
                let estimated;
                let m = if self.algorithm == Algorithm::DpCdPrivCst {
                    let eps = self.estimation_epsilon;
                    estimated = private_smoothness(
                        pb.dataset(),
                        pb.loss(),
                        &exp.estimation_bounds,
                        eps,
                        &mut rng,
                    )?;
                    &estimated
                } else {
                    &exp.smoothness
                };
                let mut plan = match (spec.calibration, cal) {
                    (Calibration::Numeric, Some(cal)) => {
                        DpCdPlan::with_calibration(pb, &cfg, m, cal)?
                    }
                    _ => DpCdPlan::private(pb, &cfg, m, self.budget, spec.calibration)?,
                };
                if self.algorithm == Algorithm::DpCdPrivCst {
                    plan.audit = plan.audit.with_pure_spend(
                        ESTIMATION_PURPOSE,
                        self.estimation_epsilon,
                        exp.budget,
                    );
                }
                Ok(dp_cd(pb, &cfg, &plan, &mut rng)?)
            }
            Algorithm::DpSgd => {
                let cfg = SolverConfig::dp_sgd(cell.step, cell.clip, cell.passes, spec.batch_size)
                    .with_seed(seed)
                    .with_trace(trace);
                let plan = match cal {
                    Some(cal) => DpSgdPlan::with_calibration(pb, &cfg, cal, exp.beta)?,
                    None => DpSgdPlan::private(pb, &cfg, self.budget, exp.beta)?,
                };
                Ok(dp_sgd(pb, &cfg, &plan, &mut rng)?)
            }
        }
    }
}
