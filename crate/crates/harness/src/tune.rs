//! Grid search over step size, clipping scale and number of passes.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{HarnessError, Result};
use crate::runner::{Cell, Experiment, Runner};
use crate::spec::{Algorithm, AlgorithmSpec};

#[derive(Debug, Clone, Serialize)]
pub struct CellResult {
    pub cell: Cell,
    /// Mean final objective over the tuning runs; `inf` if any run diverged.
    pub mean_objective: f64,
    pub diverged_runs: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct TuningResult {
    pub algorithm: Algorithm,
    pub tuning_runs: usize,
    pub best: CellResult,
    /// Best cell at every pass count that has at least one finite cell.
    pub best_per_passes: Vec<CellResult>,
    pub cells: Vec<CellResult>,
}

/// Grid cells in evaluation order: passes, then step, then clip.
pub fn grid_cells(exp: &Experiment, algo: &AlgorithmSpec) -> Vec<Cell> {
    let g = exp.spec.algorithm_grid(algo);
    let mut cells = Vec::with_capacity(g.passes.len() * g.steps.len() * g.clips.len());
    for &passes in &g.passes {
        for &step in &g.steps {
            for &clip in &g.clips {
                cells.push(Cell { step, clip, passes });
            }
        }
    }
    cells
}

/// Lower mean objective wins; exact ties go to the smaller step, then the
/// smaller clip, then fewer passes.
fn better(a: &CellResult, b: &CellResult) -> bool {
    let key = |c: &CellResult| (c.mean_objective, c.cell.step, c.cell.clip, c.cell.passes);
    let (x, y) = (key(a), key(b));
    x.0.total_cmp(&y.0)
        .then(x.1.total_cmp(&y.1))
        .then(x.2.total_cmp(&y.2))
        .then(x.3.cmp(&y.3))
        .is_lt()
}

fn argmin<'a>(cells: impl Iterator<Item = &'a CellResult>) -> Option<&'a CellResult> {
    cells
        .filter(|c| c.mean_objective.is_finite())
        .fold(None, |best: Option<&CellResult>, c| match best {
            Some(b) if !better(c, b) => Some(b),
            _ => Some(c),
        })
}

/// Selects the best cell from already evaluated results.
pub fn select(
    algorithm: Algorithm,
    tuning_runs: usize,
    cells: Vec<CellResult>,
) -> Result<TuningResult> {
    let best = argmin(cells.iter()).cloned().ok_or_else(|| {
        let diverged: usize = cells.iter().map(|c| c.diverged_runs).sum();
        let nonfinite = cells.iter().filter(|c| !c.mean_objective.is_finite()).count();
        HarnessError::TuningFailure {
            algorithm: algorithm.to_string(),
            cells: cells.len(),
            diagnostics: format!(
                "{nonfinite} cells with non-finite mean objective, {diverged} diverged runs out of {}",
                cells.len() * tuning_runs
            ),
        }
    })?;
    let mut passes: Vec<usize> = cells.iter().map(|c| c.cell.passes).collect();
    passes.sort_unstable();
    passes.dedup();
    let best_per_passes = passes
        .into_iter()
        .filter_map(|k| argmin(cells.iter().filter(|c| c.cell.passes == k)).cloned())
        .collect();
    Ok(TuningResult {
        algorithm,
        tuning_runs,
        best,
        best_per_passes,
        cells,
    })
}

/// Runs every cell `tuning_runs` times with tracing off. Jobs are collected
/// in index order, so the result does not depend on the thread count.
pub fn tune(exp: &Experiment, runner: &Runner<'_>, algo: &AlgorithmSpec) -> Result<TuningResult> {
    let cells = grid_cells(exp, algo);
    let reps = exp.spec.algorithm_grid(algo).tuning_runs;
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..reps).map(move |r| (c, r)))
        .collect();
    let objectives: Vec<Result<f64>> = jobs
        .par_iter()
        .map(|&(c, r)| {
            let seed = exp.run_seed(algo.kind, 0, c as u64, r as u64);
            runner.run(cells[c], seed, false).map(|s| s.objective)
        })
        .collect();
    let mut results = Vec::with_capacity(cells.len());
    let mut objectives = objectives.into_iter();
    for cell in cells {
        let mut sum = 0.0;
        let mut diverged = 0;
        for _ in 0..reps {
            let f = objectives.next().expect("one result per job")?;
            if f.is_finite() {
                sum += f;
            } else {
                diverged += 1;
            }
        }
        let mean_objective = if diverged > 0 {
            f64::INFINITY
        } else {
            sum / reps as f64
        };
        results.push(CellResult {
            cell,
            mean_objective,
            diverged_runs: diverged,
        });
    }
    select(algo.kind, reps, results)
}
