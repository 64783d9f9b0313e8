//! Monte Carlo evaluation of the weighted L² distance between empirical
//! characteristic functions.
//!
//! `T₂ = n∫|φ_n(t) − φ_{0,n}(t)|² w(t) dt` is estimated by averaging
//! `n[(c − c₀)² + (s − s₀)²]` over draws `t ~ w`, where `c`, `s` are the
//! empirical cosine and sine means. The weight for each kernel is the law
//! whose characteristic function is `Ψ(‖u‖²)`:
//!
//! * Gaussian: `t ~ N(0, I)`
//! * Stable(b): `t = √(2S)·Z`, `S` positive stable of index `b/2`
//! * GenLaplace(b): `t = √(2G)·Z`, `G ~ Gamma(b, 1)`

use rand::distr::Distribution;
use rand::Rng;
use rand_distr::Gamma;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::WeightKernel;
use crate::samplers::variates::{fill_standard_normal, PositiveStable};
use crate::samplers::{Phase, RngStream, Sample};

pub const MIN_ORACLE_DRAWS: usize = 100;

const CHUNK: usize = 8192;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegralEstimate {
    pub value: f64,
    pub std_error: f64,
    pub draws: usize,
}

impl IntegralEstimate {
    /// `n/(n−1)·(T₂ − 2)` and its standard error.
    pub fn implied_statistic(&self, n: usize) -> (f64, f64) {
        let f = n as f64 / (n - 1) as f64;
        (f * (self.value - 2.0), f * self.std_error)
    }
}

/// Sampler for the weight `w` associated with a kernel.
#[derive(Debug, Clone, Copy)]
pub enum WeightSampler {
    Gaussian,
    Stable(PositiveStable),
    GenLaplace(Gamma<f64>),
}

impl WeightSampler {
    pub fn new(kernel: &WeightKernel) -> Result<Self> {
        Ok(match *kernel {
            WeightKernel::Gaussian => WeightSampler::Gaussian,
            WeightKernel::Stable { b } => WeightSampler::Stable(PositiveStable::new(b / 2.0)?),
            WeightKernel::GenLaplace { b } => WeightSampler::GenLaplace(
                Gamma::new(b, 1.0).map_err(|e| Error::domain(format!("gamma weight: {e}")))?,
            ),
        })
    }

    /// Fills `t` with one draw.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R, t: &mut [f64]) {
        let scale = match self {
            WeightSampler::Gaussian => 1.0,
            WeightSampler::Stable(s) => (2.0 * s.sample(rng)).sqrt(),
            WeightSampler::GenLaplace(g) => (2.0 * g.sample(rng)).sqrt(),
        };
        fill_standard_normal(rng, t);
        if scale != 1.0 {
            t.iter_mut().for_each(|v| *v *= scale);
        }
    }
}

fn ecf(x: &Sample, t: &[f64]) -> (f64, f64) {
    let (mut c, mut s) = (0.0, 0.0);
    for row in x.rows() {
        let a: f64 = row.iter().zip(t).map(|(u, v)| u * v).sum();
        let (sin, cos) = a.sin_cos();
        c += cos;
        s += sin;
    }
    let n = x.n() as f64;
    (c / n, s / n)
}

/// Estimates `T₂` for standardized data `x_std` against `x0`.
///
/// Draws are split into fixed chunks, each with its own substream, and the
/// chunk totals are reduced in chunk order, so the result depends only on
/// `stream` and `n_mc`.
pub fn t2_integral_oracle(
    x_std: &Sample,
    x0: &Sample,
    kernel: &WeightKernel,
    n_mc: usize,
    stream: RngStream,
) -> Result<IntegralEstimate> {
    if n_mc < MIN_ORACLE_DRAWS {
        return Err(Error::domain(format!(
            "oracle needs at least {MIN_ORACLE_DRAWS} draws, got {n_mc}"
        )));
    }
    if x_std.p() != x0.p() || x_std.n() != x0.n() {
        return Err(Error::shape("oracle samples differ in shape"));
    }
    let weight = WeightSampler::new(kernel)?;
    let n = x_std.n() as f64;
    let p = x_std.p();
    let chunks = n_mc.div_ceil(CHUNK);
    let partial: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream.substream(Phase::Oracle, c as u64).rng();
            let len = CHUNK.min(n_mc - c * CHUNK);
            let mut t = vec![0.0; p];
            let (mut sum, mut sq) = (0.0, 0.0);
            for _ in 0..len {
                weight.draw(&mut rng, &mut t);
                let (c1, s1) = ecf(x_std, &t);
                let (c0, s0) = ecf(x0, &t);
                let g = n * ((c1 - c0).powi(2) + (s1 - s0).powi(2));
                sum += g;
                sq += g * g;
            }
            (sum, sq)
        })
        .collect();
    let (sum, sq) = partial
        .iter()
        .fold((0.0, 0.0), |(a, b), (c, d)| (a + c, b + d));
    let m = n_mc as f64;
    let mean = sum / m;
    let var = ((sq - m * mean * mean) / (m - 1.0)).max(0.0);
    Ok(IntegralEstimate {
        value: mean,
        std_error: (var / m).sqrt(),
        draws: n_mc,
    })
}
