use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dpcd_core::data::{ActiveWeights, SparseRegression};
use dpcd_core::estimation::{
    clipped_smoothness, default_bounds, laplace_scale, private_smoothness,
};
use dpcd_core::rng::seeded;
use dpcd_core::solvers::reference_solve;
use dpcd_core::{FeatureBounds, LabelColumn, Loss};
use dpcd_harness::experiment::write_outputs;
use dpcd_harness::spec::{build_problem, problem_bounds, sparse_lasso_preset, SPARSE_LASSO_SEED};
use dpcd_harness::{
    run_experiment, tune, Algorithm, AlgorithmSpec, DataSource, Experiment, ExperimentSpec,
    HarnessError, Preprocessing, ProblemSpec, RegularizerKind,
};
use serde::Serialize;
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "dpcd",
    version,
    about = "Differentially private coordinate descent experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic sparse regression dataset as CSV.
    Generate(GenerateArgs),
    /// Solve the non-private problem to high precision.
    SolveReference(ProblemArgs),
    /// Estimate coordinate-wise smoothness constants under pure DP.
    EstimateSmoothness(SmoothnessArgs),
    /// Grid-search every algorithm and report the chosen cells.
    Tune(ExperimentArgs),
    /// Tune, evaluate with fresh seeds and write report.json, curves.csv and audit.json.
    Run(ExperimentArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    SparseLasso,
}

#[derive(Clone, Copy, ValueEnum)]
enum LossArg {
    Squared,
    Logistic,
}

#[derive(Clone, Copy, ValueEnum)]
enum RegularizerArg {
    None,
    L1,
    L2,
}

#[derive(Args)]
struct GenerateArgs {
    /// Start from a built-in generator.
    #[arg(long, value_enum)]
    synthetic: Option<Preset>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    p: Option<usize>,
    /// Number of nonzero coefficients.
    #[arg(long)]
    k: Option<usize>,
    /// Standard deviation of the label noise.
    #[arg(long)]
    noise: Option<f64>,
    /// Standard deviation of the nonzero coefficients.
    #[arg(long)]
    weight_std: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV (features x1..xp, label y).
    #[arg(long)]
    out: PathBuf,
    /// Also write the true coefficients, one per line.
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args)]
struct DataArgs {
    /// JSON experiment spec; other flags override its fields.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// CSV file with a header row.
    #[arg(long, conflicts_with = "synthetic")]
    data: Option<PathBuf>,
    /// Label column of `--data`, by name or index.
    #[arg(long, default_value = "y")]
    label: String,
    #[arg(long, value_enum)]
    synthetic: Option<Preset>,
    /// Standardize features to zero mean and unit variance.
    #[arg(long)]
    standardize: bool,
    #[arg(long, value_enum)]
    loss: Option<LossArg>,
    #[arg(long, value_enum)]
    regularizer: Option<RegularizerArg>,
    #[arg(long)]
    lambda: Option<f64>,
}

#[derive(Args)]
struct ProblemArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Relative decrease per cycle at which the solver stops.
    #[arg(long)]
    tol: Option<f64>,
    /// Output JSON file (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SmoothnessArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Epsilon spent on the estimate.
    #[arg(long)]
    epsilon: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Defaults to 1/n^2.
    #[arg(long)]
    delta: Option<f64>,
    /// Base seed of every run.
    #[arg(long)]
    seed: Option<u64>,
    /// Comma separated pass counts replacing the grid's.
    #[arg(long, value_delimiter = ',')]
    passes: Option<Vec<usize>>,
    /// Comma separated subset of dp_cd, dp_cd_priv_cst, dp_sgd.
    #[arg(long, value_delimiter = ',')]
    algorithms: Option<Vec<String>>,
    #[arg(long)]
    tuning_runs: Option<usize>,
    #[arg(long)]
    eval_runs: Option<usize>,
    /// Worker threads (all cores by default).
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory (`run`) or JSON file (`tune`, stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn invalid(m: impl Into<String>) -> HarnessError {
    HarnessError::InvalidSpec(m.into())
}

/// `needs_lambda` is false for commands that never touch the regularizer.
fn base_spec(
    a: &DataArgs,
    epsilon: Option<f64>,
    needs_lambda: bool,
) -> Result<ExperimentSpec, HarnessError> {
    let mut spec = if let Some(path) = &a.spec {
        ExperimentSpec::from_json(&fs::read_to_string(path)?)?
    } else if a.synthetic.is_some() {
        ExperimentSpec::sparse_lasso(epsilon.unwrap_or(10.0))
    } else if let Some(path) = &a.data {
        let label: LabelColumn = a.label.parse().expect("infallible");
        let lambda = match a.lambda {
            Some(l) => l,
            None if !needs_lambda => 0.0,
            None => return Err(invalid("--lambda is required with --data")),
        };
        let problem = ProblemSpec {
            loss: Loss::SquaredError,
            regularizer: RegularizerKind::L1,
            lambda,
        };
        let epsilon = epsilon.unwrap_or(1.0);
        ExperimentSpec::new(
            DataSource::File {
                path: path.clone(),
                label,
            },
            problem,
            epsilon,
        )
    } else {
        return Err(invalid("one of --spec, --data or --synthetic is required"));
    };
    if a.spec.is_some() {
        if let Some(path) = &a.data {
            spec.data = DataSource::File {
                path: path.clone(),
                label: a.label.parse().expect("infallible"),
            };
        } else if a.synthetic.is_some() {
            spec.data = DataSource::Synthetic(sparse_lasso_preset(SPARSE_LASSO_SEED));
        }
    }
    if a.standardize {
        spec.preprocessing = Preprocessing::Standardized;
    }
    if let Some(l) = a.loss {
        spec.problem.loss = match l {
            LossArg::Squared => Loss::SquaredError,
            LossArg::Logistic => Loss::Logistic,
        };
    }
    if let Some(r) = a.regularizer {
        spec.problem.regularizer = match r {
            RegularizerArg::None => RegularizerKind::None,
            RegularizerArg::L1 => RegularizerKind::L1,
            RegularizerArg::L2 => RegularizerKind::L2Squared,
        };
    }
    if let Some(l) = a.lambda {
        spec.problem.lambda = l;
    }
    if let Some(e) = epsilon {
        spec.budget.epsilon = e;
    }
    Ok(spec)
}

fn experiment_spec(a: &ExperimentArgs) -> Result<ExperimentSpec, HarnessError> {
    let mut spec = base_spec(&a.data, a.epsilon, true)?;
    if let Some(d) = a.delta {
        spec.budget.delta = Some(d);
    }
    if let Some(s) = a.seed {
        spec.base_seed = s;
    }
    if let Some(names) = &a.algorithms {
        spec.algorithms = names
            .iter()
            .map(|s| s.parse::<Algorithm>().map(AlgorithmSpec::from))
            .collect::<Result<_, _>>()?;
    }
    if let Some(p) = &a.passes {
        spec.restrict_passes(p);
    }
    if let Some(r) = a.tuning_runs {
        spec.tuning_runs = r;
        for alg in &mut spec.algorithms {
            alg.tuning_runs = None;
        }
    }
    if let Some(r) = a.eval_runs {
        spec.eval_runs = r;
    }
    spec.validate()?;
    Ok(spec)
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<(), HarnessError> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(path) => fs::write(path, text)?,
        None => match writeln!(std::io::stdout(), "{text}") {
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => {}
            r => r?,
        },
    }
    Ok(())
}

fn generate(a: &GenerateArgs) -> Result<(), HarnessError> {
    let mut g = match a.synthetic {
        Some(Preset::SparseLasso) => sparse_lasso_preset(SPARSE_LASSO_SEED),
        None => SparseRegression::new(1000, 1000, 10),
    };
    if let Some(n) = a.n {
        g.n = n;
    }
    if let Some(p) = a.p {
        g.p = p;
    }
    if let Some(k) = a.k {
        g.k_active = k;
    }
    if let Some(s) = a.noise {
        g.label_noise_std = s;
    }
    if let Some(s) = a.weight_std {
        g.active_weights = ActiveWeights::Normal { std: s };
    }
    if let Some(s) = a.seed {
        g.seed = s;
    }
    let (d, w) = g.generate::<f64>()?;
    d.save_csv(&a.out, "y")?;
    if let Some(path) = &a.truth {
        let text: String = w.iter().map(|v| format!("{v}\n")).collect();
        fs::write(path, text)?;
    }
    emit(&json!({ "generator": g, "path": a.out }), None)
}

fn solve_reference(a: &ProblemArgs) -> Result<(), HarnessError> {
    let spec = base_spec(&a.data, None, true)?;
    let (pb, info) = build_problem(&spec)?;
    let sol = reference_solve(&pb, a.tol.unwrap_or(spec.reference_tol))?;
    let out = json!({
        "dataset": info,
        "objective": sol.objective,
        "cycles": sol.cycles,
        "converged": sol.converged,
        "w": sol.w,
    });
    emit(&out, a.out.as_deref())
}

fn estimate_smoothness(a: &SmoothnessArgs) -> Result<(), HarnessError> {
    let spec = base_spec(&a.data, None, false)?;
    let (pb, info) = build_problem(&spec)?;
    let fb = FeatureBounds {
        max_abs: problem_bounds(&pb),
    };
    let bounds = default_bounds(&fb, pb.loss());
    let clipped = clipped_smoothness(pb.dataset(), pb.loss(), &bounds)?;
    let mut rng = seeded(a.seed);
    let private = private_smoothness(pb.dataset(), pb.loss(), &bounds, a.epsilon, &mut rng)?;
    let scales: Vec<f64> = bounds
        .iter()
        .map(|&b| laplace_scale(b, pb.p(), pb.n(), a.epsilon))
        .collect();
    let out = json!({
        "dataset": info,
        "epsilon": a.epsilon,
        "exact": pb.smoothness_constants().as_slice(),
        "bounds": bounds,
        "clipped": clipped,
        "laplace_scales": scales,
        "private": private.as_slice(),
    });
    emit(&out, a.out.as_deref())
}

fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool, HarnessError> {
    Ok(rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()?)
}

fn run_tune(a: &ExperimentArgs) -> Result<(), HarnessError> {
    let spec = experiment_spec(a)?;
    let results = pool(a.threads)?.install(|| -> Result<_, HarnessError> {
        let exp = Experiment::prepare(spec)?;
        let mut results = Vec::new();
        for algo in &exp.spec.algorithms {
            let runner = exp.runner(algo)?;
            let t = tune(&exp, &runner, algo)?;
            results.push(json!({
                "algorithm": t.algorithm,
                "tuning_runs": t.tuning_runs,
                "best": t.best,
                "best_per_passes": t.best_per_passes,
            }));
        }
        Ok(json!({ "spec": exp.spec, "reference_objective": exp.reference.objective, "tuning": results }))
    })?;
    emit(&results, a.out.as_deref())
}

fn run(a: &ExperimentArgs) -> Result<(), HarnessError> {
    let spec = experiment_spec(a)?;
    let out = run_experiment(spec, a.threads)?;
    let dir = a.out.clone().unwrap_or_else(|| PathBuf::from("results"));
    write_outputs(&dir, &out)?;
    let summary: Vec<_> = out
        .report
        .algorithms
        .iter()
        .map(|r| {
            json!({
                "algorithm": r.algorithm,
                "best": r.best.cell,
                "mean_error": r.best.final_error.mean,
                "per_passes": r.per_passes.iter().map(|e| json!({
                    "passes": e.cell.passes,
                    "min": e.final_error.min,
                    "mean": e.final_error.mean,
                    "max": e.final_error.max,
                })).collect::<Vec<_>>(),
            })
        })
        .collect();
    emit(&json!({ "out": dir, "algorithms": summary }), None)
}

fn fail(kind: &str, message: String) -> ExitCode {
    eprintln!("{}", json!({ "error": kind, "message": message }));
    ExitCode::FAILURE
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("usage", e.to_string().trim_end().to_string()),
    };
    let result = match &cli.command {
        Command::Generate(a) => generate(a),
        Command::SolveReference(a) => solve_reference(a),
        Command::EstimateSmoothness(a) => estimate_smoothness(a),
        Command::Tune(a) => run_tune(a),
        Command::Run(a) => run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e.kind(), e.to_string()),
    }
}
