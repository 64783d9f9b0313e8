//! Monte Carlo characteristic-function goodness-of-fit tests for
//! multivariate elliptical families.
//!
//! The test compares the empirical characteristic function of standardized
//! data with that of artificial samples drawn from the null family, using a
//! spherical weight whose characteristic function is a kernel `Ψ(‖t‖²)`.
//! Critical points come from a parametric bootstrap under the standard
//! member of the family.
//!
//! Module map:
//! - [`numerics`]: symmetric positive-definite matrices (Jacobi eigen,
//!   inverse square roots) and the weight kernels.
//! - [`samplers`]: reproducible random streams, samples, null families and
//!   alternative generators.
//! - [`estimators`]: moment estimators and standardization.
//! - [`statistics`]: the two-sample kernel statistics, the closed-form BHEP
//!   statistics and the Monte Carlo integral oracle.
//! - [`engine`]: replicate aggregation, bootstrap calibration and decisions.
//! - [`harness`]: CSV input, experiment specs, power tables and the CLI.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod engine;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod numerics;
pub mod samplers;
pub mod statistics;

pub use engine::{Aggregation, BhepConfig, TestConfig, TestOutcome};
pub use error::{Error, Result};
pub use estimators::ThetaHat;
pub use numerics::{Matrix, SymPosDef, WeightKernel};
pub use samplers::{Family, FamilySpec, RngStream, Sample};
pub use statistics::StatValue;
