//! Experiment specifications and problem construction.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use dpcd_core::data::{feature_bounds, load_csv, standardize, ActiveWeights, SparseRegression};
use dpcd_core::solvers::Calibration;
use dpcd_core::{Dataset, LabelColumn, Loss, Problem, Regularizer, Schedule};
use serde::{Deserialize, Serialize};

use crate::error::{Context, HarnessError, Result};
use crate::fixture::strongly_convex_fixture;
use crate::grid::Grid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataSource {
    /// CSV file with a header row.
    File {
        path: PathBuf,
        label: LabelColumn,
    },
    Synthetic(SparseRegression),
    /// Strongly convex fixture built from the feature rows of `points`.
    Fixture {
        mu: f64,
        points: Box<DataSource>,
    },
}

/// The built-in sparse LASSO instance: `n = p = 1000`, 10 active features.
///
/// With the generator's default `N(0, 1)` coefficients and unit label noise
/// the LASSO solution at `lambda = 30` is exactly zero, so the preset uses
/// `N(0, 30^2)` coefficients and label noise of standard deviation 50.
/// At [`SPARSE_LASSO_SEED`] the zero vector has relative error about 0.61.
pub fn sparse_lasso_preset(seed: u64) -> SparseRegression {
    SparseRegression {
        label_noise_std: SPARSE_LASSO_NOISE,
        active_weights: ActiveWeights::Normal {
            std: SPARSE_LASSO_WEIGHT_STD,
        },
        seed,
        ..SparseRegression::new(1000, 1000, 10)
    }
}

pub const SPARSE_LASSO_NOISE: f64 = 50.0;
pub const SPARSE_LASSO_WEIGHT_STD: f64 = 30.0;
pub const SPARSE_LASSO_SEED: u64 = 1;
pub const SPARSE_LASSO_LAMBDA: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preprocessing {
    #[default]
    Raw,
    /// Zero mean, unit variance features; labels untouched.
    Standardized,
}

/// Multiplies one feature column after preprocessing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnScale {
    pub column: usize,
    pub factor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegularizerKind {
    None,
    L1,
    L2Squared,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub loss: Loss,
    pub regularizer: RegularizerKind,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetSpec {
    pub epsilon: f64,
    /// Defaults to `1 / n^2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    DpCd,
    /// DP-CD with privately estimated smoothness constants.
    DpCdPrivCst,
    DpSgd,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::DpCd, Algorithm::DpCdPrivCst, Algorithm::DpSgd];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::DpCd => "dp_cd",
            Algorithm::DpCdPrivCst => "dp_cd_priv_cst",
            Algorithm::DpSgd => "dp_sgd",
        }
    }

    pub(crate) fn id(self) -> u64 {
        self as u64
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s.replace('-', "_"))
            .ok_or_else(|| HarnessError::InvalidSpec(format!("unknown algorithm `{s}`")))
    }
}

/// One algorithm to tune, with optional grid overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "AlgorithmRepr")]
pub struct AlgorithmSpec {
    pub kind: Algorithm,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clips: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub passes: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tuning_runs: Option<usize>,
}

impl From<Algorithm> for AlgorithmSpec {
    fn from(kind: Algorithm) -> Self {
        Self {
            kind,
            steps: None,
            clips: None,
            passes: None,
            tuning_runs: None,
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum AlgorithmRepr {
    Bare(Algorithm),
    Full {
        kind: Algorithm,
        #[serde(default)]
        steps: Option<Vec<f64>>,
        #[serde(default)]
        clips: Option<Vec<f64>>,
        #[serde(default)]
        passes: Option<Vec<usize>>,
        #[serde(default)]
        tuning_runs: Option<usize>,
    },
}

impl From<AlgorithmRepr> for AlgorithmSpec {
    fn from(r: AlgorithmRepr) -> Self {
        match r {
            AlgorithmRepr::Bare(kind) => kind.into(),
            AlgorithmRepr::Full {
                kind,
                steps,
                clips,
                passes,
                tuning_runs,
            } => Self {
                kind,
                steps,
                clips,
                passes,
                tuning_runs,
            },
        }
    }
}

/// Resolved grid of one algorithm.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlgorithmGrid {
    pub steps: Vec<f64>,
    pub clips: Vec<f64>,
    pub passes: Vec<usize>,
    pub tuning_runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub data: DataSource,
    #[serde(default)]
    pub preprocessing: Preprocessing,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rescale: Vec<ColumnScale>,
    pub problem: ProblemSpec,
    pub budget: BudgetSpec,
    #[serde(default = "all_algorithms")]
    pub algorithms: Vec<AlgorithmSpec>,
    #[serde(default)]
    pub grid: Grid,
    #[serde(default = "five")]
    pub tuning_runs: usize,
    #[serde(default = "ten")]
    pub eval_runs: usize,
    #[serde(default)]
    pub base_seed: u64,
    /// Expected DP-SGD batch size.
    #[serde(default = "one")]
    pub batch_size: usize,
    #[serde(default)]
    pub schedule: Schedule,
    #[serde(default)]
    pub calibration: Calibration,
    /// Fraction of epsilon spent on smoothness estimation by `dp_cd_priv_cst`.
    #[serde(default = "tenth")]
    pub smoothness_fraction: f64,
    #[serde(default = "reference_tol")]
    pub reference_tol: f64,
}

fn all_algorithms() -> Vec<AlgorithmSpec> {
    Algorithm::ALL.into_iter().map(Into::into).collect()
}
fn five() -> usize {
    5
}
fn ten() -> usize {
    10
}
fn one() -> usize {
    1
}
fn tenth() -> f64 {
    0.1
}
fn reference_tol() -> f64 {
    dpcd_core::solvers::DEFAULT_TOL
}

impl ExperimentSpec {
    /// A spec with default protocol settings.
    pub fn new(data: DataSource, problem: ProblemSpec, epsilon: f64) -> Self {
        Self {
            name: None,
            data,
            preprocessing: Preprocessing::Raw,
            rescale: Vec::new(),
            problem,
            budget: BudgetSpec {
                epsilon,
                delta: None,
            },
            algorithms: all_algorithms(),
            grid: Grid::default(),
            tuning_runs: five(),
            eval_runs: ten(),
            base_seed: 0,
            batch_size: one(),
            schedule: Schedule::default(),
            calibration: Calibration::default(),
            smoothness_fraction: tenth(),
            reference_tol: reference_tol(),
        }
    }

    /// The sparse LASSO experiment at `epsilon`.
    pub fn sparse_lasso(epsilon: f64) -> Self {
        Self::new(
            DataSource::Synthetic(sparse_lasso_preset(SPARSE_LASSO_SEED)),
            ProblemSpec {
                loss: Loss::SquaredError,
                regularizer: RegularizerKind::L1,
                lambda: SPARSE_LASSO_LAMBDA,
            },
            epsilon,
        )
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HarnessError::InvalidSpec(m));
        if self.eval_runs == 0 {
            return bad("eval_runs must be at least 1".into());
        }
        if self.tuning_runs == 0 {
            return bad("tuning_runs must be at least 1".into());
        }
        if self.algorithms.is_empty() {
            return bad("no algorithm selected".into());
        }
        if !(self.smoothness_fraction > 0.0 && self.smoothness_fraction < 1.0) {
            return bad(format!(
                "smoothness_fraction must lie in (0, 1), got {}",
                self.smoothness_fraction
            ));
        }
        if !(self.problem.lambda >= 0.0) {
            return bad(format!("lambda must be >= 0, got {}", self.problem.lambda));
        }
        for a in &self.algorithms {
            let g = self.algorithm_grid(a);
            if g.steps.is_empty() || g.clips.is_empty() || g.passes.is_empty() {
                return bad(format!("empty grid for {}", a.kind));
            }
            if g.tuning_runs == 0 {
                return bad(format!("tuning_runs must be at least 1 for {}", a.kind));
            }
        }
        Ok(())
    }

    pub fn algorithm_grid(&self, a: &AlgorithmSpec) -> AlgorithmGrid {
        let default_steps = match a.kind {
            Algorithm::DpSgd => &self.grid.dp_sgd_steps,
            _ => &self.grid.dp_cd_steps,
        };
        AlgorithmGrid {
            steps: a.steps.clone().unwrap_or_else(|| default_steps.clone()),
            clips: a.clips.clone().unwrap_or_else(|| self.grid.clips.clone()),
            passes: a.passes.clone().unwrap_or_else(|| self.grid.passes.clone()),
            tuning_runs: a.tuning_runs.unwrap_or(self.tuning_runs),
        }
    }

    /// Restricts every algorithm to the given pass counts.
    pub fn restrict_passes(&mut self, passes: &[usize]) {
        self.grid.passes = passes.to_vec();
        for a in &mut self.algorithms {
            a.passes = None;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetInfo {
    /// Rows of the optimized problem (for a fixture, `n p` expanded rows).
    pub n: usize,
    pub p: usize,
    pub source: String,
}

fn load_source(src: &DataSource) -> Result<(Dataset, String)> {
    match src {
        DataSource::File { path, label } => {
            let d = load_csv(path, label).context(|| format!("loading {}", path.display()))?;
            Ok((d, format!("file {}", path.display())))
        }
        DataSource::Synthetic(g) => {
            let (d, _) = g.generate()?;
            Ok((
                d,
                format!(
                    "synthetic sparse regression (n={}, p={}, k={})",
                    g.n, g.p, g.k_active
                ),
            ))
        }
        DataSource::Fixture { points, .. } => load_source(points),
    }
}

/// Builds the problem described by `spec`.
pub fn build_problem(spec: &ExperimentSpec) -> Result<(Problem, DatasetInfo)> {
    let (mut d, source) = load_source(&spec.data)?;
    if spec.preprocessing == Preprocessing::Standardized {
        d = standardize(&d).0;
    }
    for s in &spec.rescale {
        if s.column >= d.p() {
            return Err(HarnessError::InvalidSpec(format!(
                "rescaled column {} out of range",
                s.column
            )));
        }
        d.scale_column(s.column, s.factor);
    }
    let (problem, source) = match &spec.data {
        DataSource::Fixture { mu, .. } => (
            strongly_convex_fixture(*mu, &d)?,
            format!("fixture (mu={mu}) of {source}"),
        ),
        _ => {
            let reg = match spec.problem.regularizer {
                RegularizerKind::None => Regularizer::None,
                RegularizerKind::L1 => Regularizer::L1,
                RegularizerKind::L2Squared => Regularizer::L2Squared,
            };
            (
                Problem::new(d, spec.problem.loss, reg, spec.problem.lambda)?,
                source,
            )
        }
    };
    let info = DatasetInfo {
        n: problem.n(),
        p: problem.p(),
        source,
    };
    Ok((problem, info))
}

/// Feature bounds of the optimized problem, used for default smoothness bounds.
pub fn problem_bounds(pb: &Problem) -> Vec<f64> {
    feature_bounds(pb.dataset()).max_abs
}
