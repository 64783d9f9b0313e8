//! Test statistics.
//!
//! The two-sample statistic for data `x` and an artificial null sample `x0`
//! (both of size `n`) is
//!
//! ```text
//! T = 2/(n−1) · Σ_{j<k} [Ψ(‖x_j − x_k‖²) + Ψ(‖x0_j − x0_k‖²)]
//!   − 2/(n−1) · Σ_{j,k} Ψ(‖x_j − x0_k‖²)
//! ```
//!
//! It equals `n/(n−1)·(T₂ − 2)` with `T₂ = n∫|φ_n − φ_{0,n}|² w`, so
//! `T ≥ −2n/(n−1)` with equality exactly when the samples coincide.

mod oracle;
mod sums;

pub use oracle::{t2_integral_oracle, IntegralEstimate, WeightSampler, MIN_ORACLE_DRAWS};
pub use sums::{cross_sum, within_sum, FixedSum};

pub(crate) use sums::FIXED_SCALE;
use sums::{point_sum_by, within_sum_by};

use crate::error::{Error, Result};
use crate::estimators::{estimate_and_standardize, standardize, ThetaHat};
use crate::numerics::WeightKernel;
use crate::samplers::{Family, Sample};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatValue {
    pub value: f64,
    pub n: usize,
    pub kernel: WeightKernel,
}

impl StatValue {
    /// Smallest attainable value, `−2n/(n−1)`.
    pub fn floor(n: usize) -> f64 {
        -2.0 * n as f64 / (n - 1) as f64
    }
}

/// `2/(n−1)·(within_x + within_x0 − cross)`, with the difference formed
/// exactly in fixed point before a single rounding.
pub(crate) fn combine(n: usize, within_x: FixedSum, within_x0: FixedSum, cross: FixedSum) -> f64 {
    let diff = (within_x.raw() + within_x0.raw()) as i128 - cross.raw() as i128;
    2.0 * (diff as f64 / FIXED_SCALE) / (n - 1) as f64
}

fn check_pair(x: &Sample, x0: &Sample) -> Result<()> {
    if x.n() < 2 {
        return Err(Error::domain(format!(
            "need n ≥ 2 observations, got {}",
            x.n()
        )));
    }
    if x.n() != x0.n() || x.p() != x0.p() {
        return Err(Error::shape(format!(
            "samples differ in shape: {}x{} vs {}x{}",
            x.n(),
            x.p(),
            x0.n(),
            x0.p()
        )));
    }
    Ok(())
}

/// Simple-hypothesis statistic with an artificial null sample `x0`.
pub fn t_psi_simple(x: &Sample, x0: &Sample, kernel: &WeightKernel) -> Result<StatValue> {
    check_pair(x, x0)?;
    let n = x.n();
    let value = combine(
        n,
        within_sum(x, kernel),
        within_sum(x0, kernel),
        cross_sum(x, x0, kernel),
    );
    Ok(StatValue {
        value,
        n,
        kernel: *kernel,
    })
}

/// Closed-form statistic for the standard normal null with Gaussian weight.
pub fn t_gauss_simple(x: &Sample) -> Result<StatValue> {
    let n = x.n();
    if n < 2 {
        return Err(Error::domain(format!("need n ≥ 2 observations, got {n}")));
    }
    let p = x.p() as f64;
    let within = within_sum_by(x, |d| (-0.5 * d).exp()).to_f64();
    let centre = point_sum_by(x, |d| (-0.25 * d).exp()).to_f64();
    let value = 2.0 / (n - 1) as f64 * within + n as f64 * 3f64.powf(-p / 2.0)
        - 2f64.powf(1.0 - p / 2.0) * centre;
    Ok(StatValue {
        value,
        n,
        kernel: WeightKernel::Gaussian,
    })
}

/// Composite statistic: `x` is standardized with `theta` and compared with
/// `x0`, a sample from the standard member of the family.
pub fn t_psi_composite(
    x: &Sample,
    x0: &Sample,
    theta: &ThetaHat,
    kernel: &WeightKernel,
) -> Result<StatValue> {
    check_pair(x, x0)?;
    let z = standardize(x, theta)?;
    t_psi_simple(&z, x0, kernel)
}

/// BHEP statistic with weight `N(0, β⁻²I)`, after standardizing with the
/// sample mean and `S_n`.
pub fn bhep_composite(x: &Sample, beta: f64) -> Result<StatValue> {
    if x.n() < 2 {
        return Err(Error::domain(format!(
            "need n ≥ 2 observations, got {}",
            x.n()
        )));
    }
    let (_, y) = estimate_and_standardize(x, &Family::Normal)?;
    bhep_standardized(&y, beta)
}

/// BHEP closed form on data that is already standardized.
pub fn bhep_standardized(y: &Sample, beta: f64) -> Result<StatValue> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::domain(format!(
            "BHEP beta must be positive, got {beta}"
        )));
    }
    let n = y.n() as f64;
    let p = y.p() as f64;
    let b2 = beta * beta;
    let within = within_sum_by(y, |d| (-0.5 * b2 * d).exp()).to_f64();
    let centre = point_sum_by(y, |d| (-b2 * d / (2.0 * (1.0 + b2))).exp()).to_f64();
    let value = (n + 2.0 * within) / n - 2.0 * (1.0 + b2).powf(-p / 2.0) * centre
        + n * (1.0 + 2.0 * b2).powf(-p / 2.0);
    Ok(StatValue {
        value,
        n: y.n(),
        kernel: WeightKernel::Gaussian,
    })
}
