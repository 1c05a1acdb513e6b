//! Differentially private empirical risk minimization by proximal coordinate
//! descent.
//!
//! The crate provides
//!
//! - [`data`]: dense datasets, CSV ingestion, standardization and synthetic
//!   sparse regression problems,
//! - [`objective`]: composite objectives `F = f + psi` with residual-based
//!   coordinate gradients and coordinate-wise smoothness / Lipschitz constants,
//! - [`prox`]: separable proximal operators,
//! - [`privacy`]: Gaussian and Laplace mechanisms, a Renyi-DP accountant and
//!   noise calibration,
//! - [`solvers`]: DP-CD, a DP-SGD baseline and a high precision non-private
//!   reference solver,
//! - [`estimation`]: private estimation of coordinate-wise smoothness constants.
//!
//! Numerical code is generic over a [`Scalar`] (`f32` or `f64`); privacy
//! accounting is always carried out in `f64`. Aliases for the common `f64`
//! instantiations live at the crate root.

pub mod data;
pub mod error;
pub mod estimation;
pub mod objective;
pub mod privacy;
pub mod prox;
pub mod rng;
pub mod scalar;
pub mod solvers;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use data::{FeatureBounds, LabelColumn, StandardizationParams};
pub use objective::{Loss, Regularizer};
pub use privacy::{AccountantAudit, NoiseScales, PrivacyBudget, RdpCurve};
pub use solvers::{ClipMode, Schedule, SolverConfig};

pub type Dataset = data::Dataset<f64>;
pub type Dataset32 = data::Dataset<f32>;
pub type Problem = objective::Problem<f64>;
pub type Problem32 = objective::Problem<f32>;
pub type ResidualState = objective::ResidualState<f64>;
pub type SmoothnessVector = objective::SmoothnessVector<f64>;
pub type LipschitzVector = objective::LipschitzVector<f64>;
pub type Solution = solvers::Solution<f64>;
pub type Solution32 = solvers::Solution<f32>;
