//! Univariate building blocks.
//!
//! Normal variates come from `rand_distr`'s ziggurat, gamma variates from
//! its Marsaglia–Tsang sampler (with the `U^{1/a}` boost below shape 1).
//! The positive-stable sampler is Kanter's form of Chambers–Mallows–Stuck.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};

use crate::error::{Error, Result};

#[inline]
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

#[inline]
pub fn unit_exponential<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(Exp1)
}

pub fn fill_standard_normal<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    for v in out {
        *v = rng.sample(StandardNormal);
    }
}

/// Gamma distribution with the given shape and rate.
pub fn gamma_rate(shape: f64, rate: f64) -> Result<Gamma<f64>> {
    if !(shape > 0.0 && shape.is_finite() && rate > 0.0 && rate.is_finite()) {
        return Err(Error::domain(format!(
            "gamma requires positive shape and rate, got shape={shape}, rate={rate}"
        )));
    }
    Gamma::new(shape, 1.0 / rate).map_err(|e| Error::domain(e.to_string()))
}

/// χ²_ν as Gamma(ν/2, rate 1/2).
pub fn chi_squared(nu: f64) -> Result<Gamma<f64>> {
    gamma_rate(0.5 * nu, 0.5)
}

/// Positive α-stable variate `S` with Laplace transform `E e^{−sS} = e^{−s^α}`,
/// `α ∈ (0, 1]`. At `α = 1` the law is the point mass at 1.
#[derive(Debug, Clone, Copy)]
pub struct PositiveStable {
    alpha: f64,
}

impl PositiveStable {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::domain(format!(
                "positive stable index must lie in (0, 1], got {alpha}"
            )));
        }
        Ok(PositiveStable { alpha })
    }
}

impl Distribution<f64> for PositiveStable {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let a = self.alpha;
        if a == 1.0 {
            return 1.0;
        }
        // U uniform on (0, π), E unit exponential.
        let u = loop {
            let u: f64 = rng.random::<f64>() * PI;
            if u > 0.0 {
                break u;
            }
        };
        let e: f64 = rng.sample(Exp1);
        let left = (a * u).sin() / u.sin().powf(1.0 / a);
        let right = (((1.0 - a) * u).sin() / e).powf((1.0 - a) / a);
        left * right
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn positive_stable_laplace_transform() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 200_000;
        for alpha in [0.25, 0.5, 0.75] {
            let d = PositiveStable::new(alpha).unwrap();
            let draws: Vec<f64> = (0..n).map(|_| d.sample(&mut rng)).collect();
            assert!(draws.iter().all(|&s| s > 0.0));
            for s in [0.1, 0.5, 1.0, 2.0] {
                let vals: Vec<f64> = draws.iter().map(|x| (-s * x).exp()).collect();
                let mean = vals.iter().sum::<f64>() / n as f64;
                let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
                let se = (var / n as f64).sqrt();
                let expected = (-s.powf(alpha)).exp();
                assert!(
                    (mean - expected).abs() < 4.0 * se + 1e-4,
                    "alpha={alpha} s={s}: {mean} vs {expected}"
                );
            }
        }
    }

    #[test]
    fn half_stable_matches_levy_median() {
        // S = 1/(4G) with G ~ Gamma(1/2, 1) has median 1/(4·0.2274682...)
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let d = PositiveStable::new(0.5).unwrap();
        let mut draws: Vec<f64> = (0..100_001).map(|_| d.sample(&mut rng)).collect();
        draws.sort_by(f64::total_cmp);
        let median = draws[50_000];
        let expected = 1.0 / (4.0 * 0.227_468_211_559_786_3);
        assert!(
            (median / expected - 1.0).abs() < 0.02,
            "{median} vs {expected}"
        );
    }

    #[test]
    fn gamma_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = gamma_rate(2.0, 0.5).unwrap();
        let n = 100_000;
        let draws: Vec<f64> = (0..n).map(|_| g.sample(&mut rng)).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        assert!((mean - 4.0).abs() < 3.0 * (var / n as f64).sqrt());
    }

    #[test]
    fn invalid_parameters() {
        assert!(gamma_rate(0.0, 1.0).is_err());
        assert!(chi_squared(-1.0).is_err());
        assert!(PositiveStable::new(1.5).is_err());
    }
}
