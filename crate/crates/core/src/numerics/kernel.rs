use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Kernel `Ψ` of a spherical weight distribution: the weight's
/// characteristic function is `Ψ(‖t‖²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightKernel {
    /// `Ψ(ξ) = exp(−ξ/2)`, the standard normal weight.
    Gaussian,
    /// `Ψ(ξ) = exp(−ξ^{b/2})` with `b ∈ (0, 2]`.
    Stable { b: f64 },
    /// `Ψ(ξ) = (1 + ξ)^{−b}` with `b > 0`.
    GenLaplace { b: f64 },
}

impl WeightKernel {
    pub fn gaussian() -> Self {
        WeightKernel::Gaussian
    }

    pub fn stable(b: f64) -> Result<Self> {
        if !(b > 0.0 && b <= 2.0) {
            return Err(Error::domain(format!(
                "stable kernel requires b in (0, 2], got {b}"
            )));
        }
        Ok(WeightKernel::Stable { b })
    }

    pub fn gen_laplace(b: f64) -> Result<Self> {
        if !(b > 0.0 && b.is_finite()) {
            return Err(Error::domain(format!(
                "generalized Laplace kernel requires b > 0, got {b}"
            )));
        }
        Ok(WeightKernel::GenLaplace { b })
    }

    /// Evaluates `Ψ(ξ)`, rejecting negative arguments.
    pub fn eval(&self, xi: f64) -> Result<f64> {
        if !(xi >= 0.0) {
            return Err(Error::domain(format!(
                "kernel argument must be nonnegative, got {xi}"
            )));
        }
        Ok(self.psi(xi))
    }

    #[inline]
    pub(crate) fn psi(&self, xi: f64) -> f64 {
        match *self {
            WeightKernel::Gaussian => (-0.5 * xi).exp(),
            WeightKernel::Stable { b } => (-xi.powf(0.5 * b)).exp(),
            WeightKernel::GenLaplace { b } => (1.0 + xi).powf(-b),
        }
    }
}

impl fmt::Display for WeightKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightKernel::Gaussian => write!(f, "gauss"),
            WeightKernel::Stable { b } => write!(f, "stable:{b}"),
            WeightKernel::GenLaplace { b } => write!(f, "glaplace:{b}"),
        }
    }
}

impl FromStr for WeightKernel {
    type Err = Error;

    /// Parses `gauss`, `stable:B` or `glaplace:B`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let parse_b = |arg: Option<&str>| -> Result<f64> {
            let a = arg.ok_or_else(|| {
                Error::config(format!(
                    "kernel `{name}` needs a parameter, e.g. `{name}:1`"
                ))
            })?;
            a.trim()
                .parse::<f64>()
                .map_err(|_| Error::config(format!("invalid kernel parameter `{a}`")))
        };
        match name.to_ascii_lowercase().as_str() {
            "gauss" | "gaussian" | "normal" => {
                if arg.is_some() {
                    return Err(Error::config("the gauss kernel takes no parameter"));
                }
                Ok(WeightKernel::Gaussian)
            }
            "stable" => WeightKernel::stable(parse_b(arg)?),
            "glaplace" | "genlaplace" | "laplace" => WeightKernel::gen_laplace(parse_b(arg)?),
            other => Err(Error::config(format!(
                "unknown kernel `{other}` (expected gauss, stable:B or glaplace:B)"
            ))),
        }
    }
}
