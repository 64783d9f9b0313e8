//! Moment estimation of `(δ, V)` and standardization of the data.
//!
//! `δ̂ = X̄` and `V̂ = S_n / c`, where `S_n` uses divisor `n` and `c` is the
//! family's covariance multiplier `−2Ψ₀′(0)`: 1 for normal and Laplace,
//! `ν/(ν−2)` for Student-t and `(2N+p−2)/p` for Kotz. Both estimators are
//! affine equivariant, which is what makes the null law of the statistic
//! asymptotically free of `(δ, V)`.

use crate::error::{Error, Result};
use crate::numerics::SymPosDef;
use crate::samplers::{Family, Sample};

/// Estimated location and scatter for a null family.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaHat {
    pub location: Vec<f64>,
    pub scatter: SymPosDef,
    pub family: Family,
}

impl ThetaHat {
    /// `θ₀ = (0, I_p)`.
    pub fn standard(family: Family, p: usize) -> Self {
        ThetaHat {
            location: vec![0.0; p],
            scatter: SymPosDef::identity(p),
            family,
        }
    }
}

pub fn moment_estimate(x: &Sample, family: &Family) -> Result<ThetaHat> {
    family.validate()?;
    let p = x.p();
    let s = x.covariance();
    let singular = |detail: String| {
        Error::Estimation(format!(
            "sample covariance is singular (n = {}, p = {p}): {detail}",
            x.n()
        ))
    };
    let s_n = SymPosDef::from_matrix(&s).map_err(|e| singular(e.to_string()))?;
    if s_n.is_near_singular() {
        return Err(singular(format!(
            "smallest eigenvalue {:e}",
            s_n.min_eigenvalue()
        )));
    }
    let scatter = s_n.scaled(1.0 / family.covariance_multiplier(p))?;
    Ok(ThetaHat {
        location: x.mean(),
        scatter,
        family: *family,
    })
}

/// `X̂_j = V̂^{−1/2}(X_j − δ̂)` with the symmetric inverse square root.
pub fn standardize(x: &Sample, theta: &ThetaHat) -> Result<Sample> {
    let p = x.p();
    if theta.location.len() != p || theta.scatter.dim() != p {
        return Err(Error::shape(format!(
            "estimate has dimension {} but the sample has {p}",
            theta.location.len()
        )));
    }
    let root = theta.scatter.inv_sqrt()?;
    let mut centered = vec![0.0; p];
    let mut data = vec![0.0; x.n() * p];
    for (src, dst) in x.rows().zip(data.chunks_exact_mut(p)) {
        for (c, (v, m)) in centered.iter_mut().zip(src.iter().zip(&theta.location)) {
            *c = v - m;
        }
        root.matrix().mul_vec_into(&centered, dst);
    }
    Ok(Sample::from_raw(x.n(), p, data))
}

/// Estimates under `family` and standardizes in one step.
pub fn estimate_and_standardize(x: &Sample, family: &Family) -> Result<(ThetaHat, Sample)> {
    let theta = moment_estimate(x, family)?;
    let z = standardize(x, &theta)?;
    Ok((theta, z))
}
