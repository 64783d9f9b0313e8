use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::Distribution;

use super::variates::{chi_squared, fill_standard_normal, standard_normal, unit_exponential};
use super::Sample;
use crate::error::{Error, Result};
use crate::numerics::{Matrix, SymPosDef};

/// Non-elliptical (or off-null) data generators for power studies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Alternative {
    /// Balanced mixture of `N_p(0, I)` and `N_p(θ·1, I)`.
    NormalMixture { theta: f64 },
    /// i.i.d. Uniform(0, 1) coordinates.
    UniformCube,
    /// Standard normal with the last coordinate replaced by a unit exponential.
    MarginalExp,
    /// `(1 − θ)·ML_p(0, I) + θ·N_p(0, I)`.
    LaplaceNormalMixture { theta: f64 },
    /// Skew-t with location 0, scatter `I`, slant `θ·1` and `nu` degrees of
    /// freedom (`nu = ∞` gives the skew-normal).
    SkewT { theta: f64, nu: f64 },
}

impl Alternative {
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, p: usize, rng: &mut R) -> Result<Sample> {
        sample_alternative(n, p, self, rng)
    }
}

impl fmt::Display for Alternative {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Alternative::NormalMixture { theta } => write!(f, "nm:{theta}"),
            Alternative::UniformCube => write!(f, "uniform"),
            Alternative::MarginalExp => write!(f, "mar-exp"),
            Alternative::LaplaceNormalMixture { theta } => write!(f, "laplace-normal:{theta}"),
            Alternative::SkewT { theta, nu } => write!(f, "skewt:{theta}:{nu}"),
        }
    }
}

impl FromStr for Alternative {
    type Err = Error;

    /// Tags: `nm:THETA`, `uniform`, `mar-exp`, `laplace-normal:THETA`,
    /// `skewt:THETA:NU`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').map(str::trim).collect();
        let num = |i: usize| -> Result<f64> {
            let raw = parts.get(i).ok_or_else(|| {
                Error::config(format!("alternative `{s}` is missing a parameter"))
            })?;
            parse_f64(raw).ok_or_else(|| Error::config(format!("invalid number `{raw}` in `{s}`")))
        };
        let arity = |k: usize| -> Result<()> {
            if parts.len() != k + 1 {
                return Err(Error::config(format!(
                    "alternative `{}` takes {k} parameter(s)",
                    parts[0]
                )));
            }
            Ok(())
        };
        let alt = match parts[0].to_ascii_lowercase().as_str() {
            "nm" => {
                arity(1)?;
                Alternative::NormalMixture { theta: num(1)? }
            }
            "uniform" => {
                arity(0)?;
                Alternative::UniformCube
            }
            "mar-exp" => {
                arity(0)?;
                Alternative::MarginalExp
            }
            "laplace-normal" => {
                arity(1)?;
                Alternative::LaplaceNormalMixture { theta: num(1)? }
            }
            "skewt" => {
                arity(2)?;
                Alternative::SkewT {
                    theta: num(1)?,
                    nu: num(2)?,
                }
            }
            other => {
                return Err(Error::config(format!(
                    "unknown alternative `{other}` (expected nm, uniform, mar-exp, laplace-normal or skewt)"
                )))
            }
        };
        alt.validate()?;
        Ok(alt)
    }
}

impl Alternative {
    fn validate(&self) -> Result<()> {
        match *self {
            Alternative::LaplaceNormalMixture { theta } if !(0.0..=1.0).contains(&theta) => Err(
                Error::domain(format!("mixture weight must lie in [0, 1], got {theta}")),
            ),
            Alternative::SkewT { nu, .. } if !(nu > 0.0) => Err(Error::domain(format!(
                "skew-t degrees of freedom must be positive, got {nu}"
            ))),
            Alternative::NormalMixture { theta } | Alternative::SkewT { theta, .. }
                if !theta.is_finite() =>
            {
                Err(Error::domain("alternative parameter must be finite"))
            }
            _ => Ok(()),
        }
    }
}

pub(crate) fn parse_f64(raw: &str) -> Option<f64> {
    match raw.to_ascii_lowercase().as_str() {
        "inf" | "infinity" | "+inf" => Some(f64::INFINITY),
        other => other.parse().ok(),
    }
}

/// Draws `n` rows of dimension `p` from the named alternative.
pub fn sample_alternative<R: Rng + ?Sized>(
    n: usize,
    p: usize,
    alt: &Alternative,
    rng: &mut R,
) -> Result<Sample> {
    alt.validate()?;
    let mut data = vec![0.0; n * p];
    match *alt {
        Alternative::NormalMixture { theta } => {
            for row in data.chunks_exact_mut(p) {
                let shift = if rng.random::<bool>() { theta } else { 0.0 };
                fill_standard_normal(rng, row);
                row.iter_mut().for_each(|v| *v += shift);
            }
        }
        Alternative::UniformCube => {
            for v in data.iter_mut() {
                *v = rng.random::<f64>();
            }
        }
        Alternative::MarginalExp => {
            for row in data.chunks_exact_mut(p) {
                fill_standard_normal(rng, &mut row[..p - 1]);
                row[p - 1] = unit_exponential(rng);
            }
        }
        Alternative::LaplaceNormalMixture { theta } => {
            for row in data.chunks_exact_mut(p) {
                let normal = rng.random::<f64>() < theta;
                let scale = if normal {
                    1.0
                } else {
                    unit_exponential(rng).sqrt()
                };
                fill_standard_normal(rng, row);
                row.iter_mut().for_each(|v| *v *= scale);
            }
        }
        Alternative::SkewT { theta, nu } => {
            return sample_skew_t(
                n,
                &vec![0.0; p],
                &SymPosDef::identity(p),
                &vec![theta; p],
                nu,
                rng,
            )
        }
    }
    Sample::new(n, p, data)
}

/// Skew-t by slant conditioning, in the slant (`α`) parameterization.
///
/// With `Ω = ω Ω̄ ω` (`ω` the diagonal of standard deviations) and
/// `δ = Ω̄α / √(1 + αᵀΩ̄α)`, draw `(U₀, Z₀)` jointly normal with
/// `Var Z₀ = Ω̄` and `Cov(U₀, Z₀) = δ`, flip `Z₀` when `U₀ ≤ 0`, then return
/// `μ + ω Z / √(W/ν)` with `W ~ χ²_ν`.
pub fn sample_skew_t<R: Rng + ?Sized>(
    n: usize,
    location: &[f64],
    scatter: &SymPosDef,
    slant: &[f64],
    nu: f64,
    rng: &mut R,
) -> Result<Sample> {
    let p = scatter.dim();
    if location.len() != p || slant.len() != p {
        return Err(Error::shape(
            "skew-t location, scatter and slant dimensions differ",
        ));
    }
    if !(nu > 0.0) {
        return Err(Error::domain(format!(
            "skew-t degrees of freedom must be positive, got {nu}"
        )));
    }
    let omega: Vec<f64> = (0..p).map(|i| scatter.get(i, i).sqrt()).collect();
    let mut corr = Matrix::zeros(p, p);
    for i in 0..p {
        for j in 0..p {
            corr[(i, j)] = scatter.get(i, j) / (omega[i] * omega[j]);
        }
    }
    let corr_alpha = corr.mul_vec(slant);
    let quad: f64 = slant.iter().zip(&corr_alpha).map(|(a, b)| a * b).sum();
    let delta: Vec<f64> = corr_alpha.iter().map(|v| v / (1.0 + quad).sqrt()).collect();
    let mut resid = corr.clone();
    for i in 0..p {
        for j in 0..p {
            resid[(i, j)] -= delta[i] * delta[j];
        }
    }
    let resid_root = SymPosDef::from_matrix(&resid)?.sqrt();
    let chi = if nu.is_finite() {
        Some(chi_squared(nu)?)
    } else {
        None
    };

    let mut eps = vec![0.0; p];
    let mut z = vec![0.0; p];
    let mut data = vec![0.0; n * p];
    for row in data.chunks_exact_mut(p) {
        let u0 = standard_normal(rng);
        fill_standard_normal(rng, &mut eps);
        resid_root.matrix().mul_vec_into(&eps, &mut z);
        let sign = if u0 > 0.0 { 1.0 } else { -1.0 };
        let scale = match &chi {
            Some(c) => 1.0 / (c.sample(rng) / nu).sqrt(),
            None => 1.0,
        };
        for i in 0..p {
            row[i] = location[i] + omega[i] * scale * sign * (delta[i] * u0 + z[i]);
        }
    }
    Sample::new(n, p, data)
}
