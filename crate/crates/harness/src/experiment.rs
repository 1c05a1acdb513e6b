//! Tuning followed by fresh-seed evaluation of every algorithm.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use dpcd_core::{AccountantAudit, Solution, SolverConfig};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Context, Result};
use crate::metrics::{relative_error, Summary};
use crate::runner::{Cell, Experiment, ReferenceSummary};
use crate::spec::{Algorithm, DatasetInfo, ExperimentSpec};
use crate::tune::{tune, CellResult, TuningResult};

/// Evaluation of one tuned configuration.
#[derive(Debug, Clone, Serialize)]
pub struct Evaluation {
    pub cell: Cell,
    pub tuning_mean_objective: f64,
    pub noise_multiplier: Option<f64>,
    pub config: SolverConfig,
    pub final_error: Summary,
    pub final_errors: Vec<f64>,
    /// Errors are absolute gaps because `F*` is (nearly) zero.
    pub absolute_error: bool,
    /// Per-pass error (index 0 is the starting point) over the eval runs.
    pub curve: Vec<Summary>,
    pub diverged_runs: usize,
    pub audits: Vec<AccountantAudit>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AlgorithmReport {
    pub algorithm: Algorithm,
    pub cells: usize,
    pub tuning_runs: usize,
    /// Overall best configuration.
    pub best: Evaluation,
    /// Best configuration at every pass count.
    pub per_passes: Vec<Evaluation>,
}

impl AlgorithmReport {
    pub fn at_passes(&self, passes: usize) -> Option<&Evaluation> {
        self.per_passes.iter().find(|e| e.cell.passes == passes)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Environment {
    pub package: &'static str,
    pub version: &'static str,
    pub scalar: &'static str,
}

impl Default for Environment {
    fn default() -> Self {
        Self {
            package: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            scalar: "f64",
        }
    }
}

/// Deterministic part of an experiment's output: a pure function of the
/// spec, hence of `base_seed`.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub spec: ExperimentSpec,
    pub dataset: DatasetInfo,
    pub delta: f64,
    pub reference: ReferenceSummary,
    pub algorithms: Vec<AlgorithmReport>,
    pub environment: Environment,
}

impl RunReport {
    pub fn algorithm(&self, a: Algorithm) -> Option<&AlgorithmReport> {
        self.algorithms.iter().find(|r| r.algorithm == a)
    }

    /// Every private evaluation run stayed within the experiment's epsilon.
    pub fn audits_within_budget(&self) -> bool {
        let eps = self.spec.budget.epsilon;
        self.algorithms
            .iter()
            .flat_map(|a| &a.per_passes)
            .flat_map(|e| &e.audits)
            .all(|a| {
                a.is_private()
                    && a.within_budget()
                    && a.total_epsilon() <= eps * (1.0 + 4.0 * f64::EPSILON)
            })
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct AlgorithmTimings {
    pub algorithm: Option<Algorithm>,
    pub tuning_seconds: f64,
    /// Wall-clock of every evaluation run, keyed by pass count.
    pub eval_seconds: Vec<(usize, Vec<f64>)>,
}

/// Wall-clock measurements, kept out of the report so that it stays
/// reproducible.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Timings {
    pub reference_seconds: f64,
    pub algorithms: Vec<AlgorithmTimings>,
    pub total_seconds: f64,
}

pub struct ExperimentOutput {
    pub report: RunReport,
    pub tuning: Vec<TuningResult>,
    pub timings: Timings,
}

fn evaluate(
    exp: &Experiment,
    runner: &crate::runner::Runner<'_>,
    best: &CellResult,
    index: u64,
) -> Result<(Evaluation, Vec<f64>)> {
    let runs = exp.spec.eval_runs;
    let f_star = exp.reference.objective;
    let results: Vec<Result<(Solution, f64)>> = (0..runs)
        .into_par_iter()
        .map(|r| {
            let seed = exp.run_seed(runner.algorithm, 1, index, r as u64);
            let t = Instant::now();
            let s = runner.run(best.cell, seed, true)?;
            Ok((s, t.elapsed().as_secs_f64()))
        })
        .collect();
    let mut solutions = Vec::with_capacity(runs);
    let mut seconds = Vec::with_capacity(runs);
    for r in results {
        let (s, t) = r?;
        solutions.push(s);
        seconds.push(t);
    }
    let passes = best.cell.passes;
    let final_errors: Vec<f64> = solutions
        .iter()
        .map(|s| relative_error(s.objective, f_star).value)
        .collect();
    let curve = (0..=passes)
        .map(|k| {
            let at: Vec<f64> = solutions
                .iter()
                .map(|s| {
                    s.trace
                        .get(k)
                        .map_or(f64::INFINITY, |&f| relative_error(f, f_star).value)
                })
                .collect();
            Summary::of(&at)
        })
        .collect();
    let eval = Evaluation {
        cell: best.cell,
        tuning_mean_objective: best.mean_objective,
        noise_multiplier: runner.noise_multiplier(passes),
        config: solutions[0].config.clone(),
        final_error: Summary::of(&final_errors),
        final_errors,
        absolute_error: relative_error(0.0, f_star).absolute,
        curve,
        diverged_runs: solutions.iter().filter(|s| s.diverged).count(),
        audits: solutions.into_iter().map(|s| s.audit).collect(),
    };
    Ok((eval, seconds))
}

fn run_all(spec: ExperimentSpec) -> Result<ExperimentOutput> {
    let start = Instant::now();
    let exp = Experiment::prepare(spec)?;
    let reference_seconds = start.elapsed().as_secs_f64();
    let mut algorithms = Vec::new();
    let mut tuning = Vec::new();
    let mut timings = Timings {
        reference_seconds,
        ..Timings::default()
    };
    for algo in &exp.spec.algorithms {
        let t = Instant::now();
        let runner = exp.runner(algo)?;
        let tuned = tune(&exp, &runner, algo).context(|| format!("tuning {}", algo.kind))?;
        let tuning_seconds = t.elapsed().as_secs_f64();
        let mut per_passes = Vec::new();
        let mut eval_seconds = Vec::new();
        for cell in &tuned.best_per_passes {
            let (e, secs) = evaluate(&exp, &runner, cell, cell.cell.passes as u64)
                .context(|| format!("evaluating {}", algo.kind))?;
            eval_seconds.push((cell.cell.passes, secs));
            per_passes.push(e);
        }
        let best = per_passes
            .iter()
            .find(|e| e.cell == tuned.best.cell)
            .cloned()
            .expect("the overall best is the best of its pass count");
        algorithms.push(AlgorithmReport {
            algorithm: algo.kind,
            cells: tuned.cells.len(),
            tuning_runs: tuned.tuning_runs,
            best,
            per_passes,
        });
        timings.algorithms.push(AlgorithmTimings {
            algorithm: Some(algo.kind),
            tuning_seconds,
            eval_seconds,
        });
        tuning.push(tuned);
    }
    timings.total_seconds = start.elapsed().as_secs_f64();
    let report = RunReport {
        dataset: exp.info.clone(),
        delta: exp.budget.delta,
        reference: exp.reference_summary(),
        spec: exp.spec,
        algorithms,
        environment: Environment::default(),
    };
    Ok(ExperimentOutput {
        report,
        tuning,
        timings,
    })
}

/// Runs `spec` on `threads` worker threads (all available cores when `None`).
/// The report does not depend on the thread count.
pub fn run_experiment(spec: ExperimentSpec, threads: Option<usize>) -> Result<ExperimentOutput> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()?;
    pool.install(|| run_all(spec))
}

/// Per-pass error curves as CSV: `algorithm,passes,pass,min,mean,max`.
pub fn write_curves<W: Write>(report: &RunReport, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["algorithm", "passes", "pass", "min", "mean", "max"])?;
    for a in &report.algorithms {
        for e in &a.per_passes {
            for (k, s) in e.curve.iter().enumerate() {
                out.write_record([
                    a.algorithm.name().to_string(),
                    e.cell.passes.to_string(),
                    k.to_string(),
                    s.min.to_string(),
                    s.mean.to_string(),
                    s.max.to_string(),
                ])?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct AuditEntry<'a> {
    algorithm: Algorithm,
    passes: usize,
    run: usize,
    audit: &'a AccountantAudit,
}

/// Writes `report.json`, `curves.csv`, `audit.json` and `timings.json`.
pub fn write_outputs(dir: &Path, out: &ExperimentOutput) -> Result<()> {
    fs::create_dir_all(dir).context(|| format!("creating {}", dir.display()))?;
    fs::write(
        dir.join("report.json"),
        serde_json::to_string_pretty(&out.report)?,
    )?;
    write_curves(&out.report, fs::File::create(dir.join("curves.csv"))?)?;
    let audits: Vec<AuditEntry> = out
        .report
        .algorithms
        .iter()
        .flat_map(|a| {
            a.per_passes.iter().flat_map(move |e| {
                e.audits
                    .iter()
                    .enumerate()
                    .map(move |(run, audit)| AuditEntry {
                        algorithm: a.algorithm,
                        passes: e.cell.passes,
                        run,
                        audit,
                    })
            })
        })
        .collect();
    fs::write(
        dir.join("audit.json"),
        serde_json::to_string_pretty(&audits)?,
    )?;
    fs::write(
        dir.join("timings.json"),
        serde_json::to_string_pretty(&out.timings)?,
    )?;
    Ok(())
}
