//! Experiment harness: problem construction from JSON specs, grid-search
//! tuning, fresh-seed evaluation and report emission.
//!
//! Grid cells run in parallel on a rayon pool; every run draws from its own
//! stream seeded by `(base_seed, algorithm, phase, cell, repetition)`, so
//! reports are identical for any thread count.

pub mod error;
pub mod experiment;
pub mod fixture;
pub mod grid;
pub mod metrics;
pub mod runner;
pub mod spec;
pub mod tune;

pub use error::{HarnessError, Result};
pub use experiment::{
    run_experiment, write_outputs, AlgorithmReport, Evaluation, ExperimentOutput, RunReport,
};
pub use fixture::{row_mean, strongly_convex_fixture};
pub use grid::{default_grid, log_space, Grid};
pub use metrics::{relative_error, RelativeError, Summary};
pub use runner::{Cell, Experiment, Runner};
pub use spec::{
    Algorithm, AlgorithmSpec, DataSource, ExperimentSpec, Preprocessing, ProblemSpec,
    RegularizerKind,
};
pub use tune::{tune, TuningResult};
