//! Minimum L1-norm drift estimation for Ornstein-Uhlenbeck type processes
//! driven by small Gaussian noise.
//!
//! The model is `dX_t = θ X_t dt + ε dG_t`, `X_0 = x0`, on `[0, T]` with `G`
//! a centered Gaussian process given by its covariance kernel. The crate
//! samples driver paths, simulates `X`, computes the minimum L1-norm estimate
//! of `θ`, and provides the limit law and Gaussian maximal inequalities used to
//! study its small-noise behavior.

// Negated float comparisons are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod gp_bounds;
pub mod grid;
pub mod kernels;
pub mod l1_estimator;
pub mod limit_law;
pub mod mc_harness;
pub mod ou_model;
pub mod report;
pub mod sampler;

pub use config::ConfigMap;
pub use error::{Error, Result};
pub use grid::{SamplePath, TimeGrid};
pub use kernels::{CovarianceKernel, Kernel, KernelRegistry};
pub use l1_estimator::{g_delta, minimize_l1, EstimateResult};
pub use mc_harness::{Experiment, ExperimentConfig, ExperimentKind, ExperimentRegistry, ExperimentReport};
pub use ou_model::{ModelParams, SchemeRegistry, SimulationScheme};
pub use sampler::{PathSampler, SamplerRegistry, SeedSpec};
