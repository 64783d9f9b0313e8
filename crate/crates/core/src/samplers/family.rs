use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::Distribution;

use super::variates::{chi_squared, fill_standard_normal, gamma_rate, unit_exponential};
use super::Sample;
use crate::error::{Error, Result};
use crate::numerics::SymPosDef;

/// Elliptical null family with its fixed hyperparameters.
///
/// Laplace is parameterized by its moments (`E X = δ`, `Cov X = V`); Kotz
/// uses `s = 1, r = 1/2`, so `Kotz { n: 1.0 }` is the normal law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    Normal,
    Laplace,
    /// Multivariate Student-t, degrees of freedom `nu > 2`.
    StudentT {
        nu: f64,
    },
    /// Kotz type with parameter `N ≥ 1`.
    Kotz {
        n: f64,
    },
}

impl Family {
    pub fn student_t(nu: f64) -> Result<Self> {
        if !(nu > 2.0) {
            return Err(Error::domain(format!(
                "Student-t null family needs nu > 2 for moment estimation, got {nu}"
            )));
        }
        Ok(Family::StudentT { nu })
    }

    pub fn kotz(n: f64) -> Result<Self> {
        if !(n >= 1.0 && n.is_finite()) {
            return Err(Error::domain(format!("Kotz family needs N ≥ 1, got {n}")));
        }
        Ok(Family::Kotz { n })
    }

    /// Re-checks the hyperparameter constraints (values built by hand bypass
    /// the constructors).
    pub fn validate(&self) -> Result<()> {
        match *self {
            Family::Normal | Family::Laplace => Ok(()),
            Family::StudentT { nu } => Family::student_t(nu).map(|_| ()),
            Family::Kotz { n } => Family::kotz(n).map(|_| ()),
        }
    }

    /// `c` in `Cov X = c·V`, i.e. `−2Ψ₀′(0)` for the family's kernel.
    pub fn covariance_multiplier(&self, p: usize) -> f64 {
        match *self {
            Family::Normal | Family::Laplace => 1.0,
            Family::StudentT { nu } => nu / (nu - 2.0),
            Family::Kotz { n } => (2.0 * n + p as f64 - 2.0) / p as f64,
        }
    }

    /// Draws `n` observations from the standard member `(0, I_p)`.
    pub fn sample_standard<R: Rng + ?Sized>(
        &self,
        n: usize,
        p: usize,
        rng: &mut R,
    ) -> Result<Sample> {
        let mut data = vec![0.0; n * p];
        match *self {
            Family::Normal => fill_standard_normal(rng, &mut data),
            Family::Laplace => {
                for row in data.chunks_exact_mut(p) {
                    let s = unit_exponential(rng).sqrt();
                    scaled_normal_row(rng, s, row);
                }
            }
            Family::StudentT { nu } => {
                let chi = chi_squared(nu)?;
                for row in data.chunks_exact_mut(p) {
                    let s = 1.0 / (chi.sample(rng) / nu).sqrt();
                    scaled_normal_row(rng, s, row);
                }
            }
            Family::Kotz { n: big_n } => {
                let radial = kotz_radial(big_n, p)?;
                for row in data.chunks_exact_mut(p) {
                    let r = radial.sample(rng).sqrt();
                    sphere_into(rng, row);
                    row.iter_mut().for_each(|v| *v *= r);
                }
            }
        }
        Sample::new(n, p, data)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Normal => write!(f, "normal"),
            Family::Laplace => write!(f, "laplace"),
            Family::StudentT { nu } => write!(f, "studentt:{nu}"),
            Family::Kotz { n } => write!(f, "kotz:{n}"),
        }
    }
}

impl FromStr for Family {
    type Err = Error;

    /// Parses `normal`, `laplace`, `studentt:NU` or `kotz:N`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a.trim())),
            None => (s, None),
        };
        let num = |arg: Option<&str>| -> Result<f64> {
            let a = arg.ok_or_else(|| {
                Error::config(format!(
                    "family `{name}` needs a parameter, e.g. `{name}:5`"
                ))
            })?;
            a.parse::<f64>()
                .map_err(|_| Error::config(format!("invalid family parameter `{a}`")))
        };
        match name.to_ascii_lowercase().as_str() {
            "normal" | "gauss" | "gaussian" => Ok(Family::Normal),
            "laplace" => Ok(Family::Laplace),
            "studentt" | "t" | "student" => Family::student_t(num(arg)?),
            "kotz" => Family::kotz(num(arg)?),
            other => Err(Error::config(format!(
                "unknown family `{other}` (expected normal, laplace, studentt:NU or kotz:N)"
            ))),
        }
    }
}

/// A fully specified elliptical law: family, location `δ` and scatter `V`.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilySpec {
    pub family: Family,
    pub location: Vec<f64>,
    pub scatter: SymPosDef,
}

impl FamilySpec {
    pub fn new(family: Family, location: Vec<f64>, scatter: SymPosDef) -> Result<Self> {
        family.validate()?;
        if location.len() != scatter.dim() {
            return Err(Error::shape(format!(
                "location has length {} but scatter is {}x{}",
                location.len(),
                scatter.dim(),
                scatter.dim()
            )));
        }
        Ok(FamilySpec {
            family,
            location,
            scatter,
        })
    }

    /// The standard member `θ₀ = (0, I_p)`.
    pub fn standard(family: Family, p: usize) -> Self {
        FamilySpec {
            family,
            location: vec![0.0; p],
            scatter: SymPosDef::identity(p),
        }
    }

    pub fn dim(&self) -> usize {
        self.location.len()
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Sample> {
        match self.family {
            Family::Normal => sample_mvnormal(n, &self.location, &self.scatter, rng),
            Family::Laplace => sample_mvlaplace(n, &self.location, &self.scatter, rng),
            Family::StudentT { nu } => sample_mvt(n, &self.location, &self.scatter, nu, rng),
            Family::Kotz { n: big_n } => sample_kotz(n, &self.location, &self.scatter, big_n, rng),
        }
    }
}

/// Uniform draw on the unit sphere in `ℝ^p` (normalized Gaussian vector).
pub fn sample_sphere<R: Rng + ?Sized>(p: usize, rng: &mut R) -> Vec<f64> {
    let mut u = vec![0.0; p];
    sphere_into(rng, &mut u);
    u
}

fn sphere_into<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    loop {
        fill_standard_normal(rng, out);
        let norm = out.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            out.iter_mut().for_each(|v| *v /= norm);
            return;
        }
    }
}

fn scaled_normal_row<R: Rng + ?Sized>(rng: &mut R, scale: f64, row: &mut [f64]) {
    fill_standard_normal(rng, row);
    row.iter_mut().for_each(|v| *v *= scale);
}

/// `R²` law of the Kotz type: Gamma(shape `N + p/2 − 1`, rate 1/2).
fn kotz_radial(big_n: f64, p: usize) -> Result<rand_distr::Gamma<f64>> {
    let shape = big_n + 0.5 * p as f64 - 1.0;
    if !(shape > 0.0) {
        return Err(Error::domain(format!(
            "Kotz generation needs N + p/2 − 1 > 0, got {shape}"
        )));
    }
    gamma_rate(shape, 0.5)
}

/// Rows `δ + s·V^{1/2} Z` where `s` is drawn per row by `scale` (before `Z`)
/// and `Z ~ N_p(0, I)`.
pub fn sample_scale_mixture<R, F>(
    n: usize,
    location: &[f64],
    scatter: &SymPosDef,
    rng: &mut R,
    mut scale: F,
) -> Result<Sample>
where
    R: Rng + ?Sized,
    F: FnMut(&mut R) -> f64,
{
    let p = check_location(location, scatter)?;
    let root = scatter.sqrt();
    let mut z = vec![0.0; p];
    let mut data = vec![0.0; n * p];
    for row in data.chunks_exact_mut(p) {
        let s = scale(rng);
        fill_standard_normal(rng, &mut z);
        root.matrix().mul_vec_into(&z, row);
        for (x, d) in row.iter_mut().zip(location) {
            *x = d + s * *x;
        }
    }
    Sample::new(n, p, data)
}

/// `N_p(δ, V)` via `δ + V^{1/2} Z`.
pub fn sample_mvnormal<R: Rng + ?Sized>(
    n: usize,
    location: &[f64],
    scatter: &SymPosDef,
    rng: &mut R,
) -> Result<Sample> {
    let p = check_location(location, scatter)?;
    let root = scatter.sqrt();
    let mut z = vec![0.0; p];
    let mut data = vec![0.0; n * p];
    for row in data.chunks_exact_mut(p) {
        fill_standard_normal(rng, &mut z);
        root.matrix().mul_vec_into(&z, row);
        for (x, d) in row.iter_mut().zip(location) {
            *x += d;
        }
    }
    Sample::new(n, p, data)
}

/// Multivariate Laplace `δ + √W·V^{1/2} Z`, `W ~ Exp(1)`; mean `δ`, covariance `V`.
pub fn sample_mvlaplace<R: Rng + ?Sized>(
    n: usize,
    location: &[f64],
    scatter: &SymPosDef,
    rng: &mut R,
) -> Result<Sample> {
    sample_scale_mixture(n, location, scatter, rng, |r| unit_exponential(r).sqrt())
}

/// Multivariate Student-t `δ + V^{1/2} Z / √(W/ν)`, `W ~ χ²_ν`.
///
/// Any `ν > 0` is accepted for generation; `ν = ∞` gives the normal law.
pub fn sample_mvt<R: Rng + ?Sized>(
    n: usize,
    location: &[f64],
    scatter: &SymPosDef,
    nu: f64,
    rng: &mut R,
) -> Result<Sample> {
    if !(nu > 0.0) {
        return Err(Error::domain(format!(
            "Student-t degrees of freedom must be positive, got {nu}"
        )));
    }
    if nu.is_infinite() {
        return sample_mvnormal(n, location, scatter, rng);
    }
    let chi = chi_squared(nu)?;
    sample_scale_mixture(n, location, scatter, rng, |r| {
        1.0 / (chi.sample(r) / nu).sqrt()
    })
}

/// Kotz type `δ + V^{1/2}·R·U` with `R² ~ Gamma(N + p/2 − 1, rate 1/2)` and
/// `U` uniform on the sphere.
pub fn sample_kotz<R: Rng + ?Sized>(
    n: usize,
    location: &[f64],
    scatter: &SymPosDef,
    big_n: f64,
    rng: &mut R,
) -> Result<Sample> {
    let p = check_location(location, scatter)?;
    let radial = kotz_radial(big_n, p)?;
    let root = scatter.sqrt();
    let mut u = vec![0.0; p];
    let mut data = vec![0.0; n * p];
    for row in data.chunks_exact_mut(p) {
        let r = radial.sample(rng).sqrt();
        sphere_into(rng, &mut u);
        root.matrix().mul_vec_into(&u, row);
        for (x, d) in row.iter_mut().zip(location) {
            *x = d + r * *x;
        }
    }
    Sample::new(n, p, data)
}

fn check_location(location: &[f64], scatter: &SymPosDef) -> Result<usize> {
    if location.len() != scatter.dim() {
        return Err(Error::shape(format!(
            "location has length {} but scatter is {}x{}",
            location.len(),
            scatter.dim(),
            scatter.dim()
        )));
    }
    Ok(location.len())
}
