//! The full Monte Carlo test: replicate aggregation, parametric bootstrap
//! critical points, p-values and decisions.
//!
//! Streams hang off `RngStream::new(seed, 0)`:
//!
//! ```text
//! data replicate r          root/Data(0)/Replicate(r)
//! bootstrap repetition j    root/Bootstrap(0)/Bootstrap(j)
//!   null replicate r          …/Replicate(r)
//!   pseudo-data               …/PseudoData(0), redraw …/Redraw(0)
//! ```
//!
//! so changing `m` or `M` never perturbs the other draws, and the result is
//! independent of the thread count.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::estimate_and_standardize;
use crate::numerics::WeightKernel;
use crate::samplers::{Family, Phase, RngStream, Sample};
use crate::statistics::{bhep_composite, combine, cross_sum, within_sum, FixedSum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    Mean,
    Max,
}

impl Aggregation {
    pub fn apply(&self, values: &[f64]) -> f64 {
        match self {
            Aggregation::Mean => values.iter().sum::<f64>() / values.len() as f64,
            Aggregation::Max => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

impl fmt::Display for Aggregation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Aggregation::Mean => "mean",
            Aggregation::Max => "max",
        })
    }
}

impl FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mean" => Ok(Aggregation::Mean),
            "max" => Ok(Aggregation::Max),
            other => Err(Error::config(format!(
                "unknown aggregation '{other}' (mean|max)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestConfig {
    /// Null family; replicates come from its standard member `(0, I)`.
    pub family: Family,
    pub kernel: WeightKernel,
    /// Replicate null samples per statistic.
    pub m: usize,
    /// Bootstrap repetitions.
    pub big_m: usize,
    pub alpha: f64,
    pub agg: Aggregation,
    pub seed: u64,
}

impl Default for TestConfig {
    fn default() -> Self {
        TestConfig {
            family: Family::Normal,
            kernel: WeightKernel::Gaussian,
            m: 10,
            big_m: 1000,
            alpha: 0.05,
            agg: Aggregation::Mean,
            seed: 0,
        }
    }
}

impl TestConfig {
    pub fn validate(&self) -> Result<()> {
        self.family.validate()?;
        if self.m == 0 {
            return Err(Error::config("m must be at least 1"));
        }
        if self.big_m == 0 {
            return Err(Error::config("M must be at least 1"));
        }
        check_alpha(self.alpha)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::config(format!(
            "alpha must lie in [0, 1), got {alpha}"
        )));
    }
    Ok(())
}

fn check_size(n: usize, p: usize) -> Result<()> {
    if n < p + 1 || n < 2 {
        return Err(Error::domain(format!(
            "need n ≥ p + 1 observations for estimation (n = {n}, p = {p})"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub statistic: f64,
    pub critical_point: f64,
    pub p_value: f64,
    pub reject: bool,
    pub m: usize,
    #[serde(rename = "M")]
    pub big_m: usize,
    pub alpha: f64,
    pub seed: u64,
    pub family: String,
    pub kernel: String,
    pub agg: String,
    pub n: usize,
    pub p: usize,
    pub wall_time_s: f64,
    /// Bootstrap pseudo-data samples that had to be redrawn.
    pub redraws: usize,
}

/// Sorted null statistics with the quantile and p-value conventions.
#[derive(Debug, Clone, PartialEq)]
pub struct NullDistribution {
    sorted: Vec<f64>,
}

impl NullDistribution {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::domain("null distribution needs at least one value"));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::Estimation("null statistic is NaN".into()));
        }
        values.sort_by(f64::total_cmp);
        Ok(NullDistribution { sorted: values })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.sorted
    }

    /// Empirical `1 − α` quantile: the `⌈(1−α)M⌉`-th order statistic, so
    /// `α = 0` gives the maximum.
    pub fn critical_point(&self, alpha: f64) -> f64 {
        let m = self.sorted.len();
        // guard against 0.95·1000 rounding up to 950.000…1
        let rank = ((1.0 - alpha) * m as f64 - 1e-9).ceil() as usize;
        self.sorted[rank.clamp(1, m) - 1]
    }

    /// `(1 + #{null ≥ stat}) / (M + 1)`.
    pub fn p_value(&self, stat: f64) -> f64 {
        let below = self.sorted.partition_point(|&v| v < stat);
        let at_or_above = self.sorted.len() - below;
        (1 + at_or_above) as f64 / (self.sorted.len() + 1) as f64
    }
}

/// Replicate statistics of standardized data `z` against `m` fresh samples
/// from the standard null member.
fn replicates_of(z: &Sample, cfg: &TestConfig, stream: RngStream) -> Result<Vec<f64>> {
    let (n, p) = (z.n(), z.p());
    let wz = within_sum(z, &cfg.kernel);
    (0..cfg.m)
        .map(|r| {
            let mut rng = stream.substream(Phase::Replicate, r as u64).rng();
            let x0 = cfg.family.sample_standard(n, p, &mut rng)?;
            Ok(replicate_value(n, wz, z, &x0, &cfg.kernel))
        })
        .collect()
}

#[inline]
fn replicate_value(n: usize, wz: FixedSum, z: &Sample, x0: &Sample, k: &WeightKernel) -> f64 {
    combine(n, wz, within_sum(x0, k), cross_sum(z, x0, k))
}

/// The `m` composite statistics for data `x` before aggregation.
pub fn replicate_statistics(x: &Sample, cfg: &TestConfig, stream: RngStream) -> Result<Vec<f64>> {
    cfg.validate()?;
    check_size(x.n(), x.p())?;
    let (_, z) = estimate_and_standardize(x, &cfg.family)?;
    replicates_of(&z, cfg, stream)
}

/// Mean or max of the `m` replicate statistics.
pub fn aggregate_statistic(x: &Sample, cfg: &TestConfig, stream: RngStream) -> Result<f64> {
    Ok(cfg.agg.apply(&replicate_statistics(x, cfg, stream)?))
}

/// Replicate statistics for every bootstrap repetition, kept unaggregated
/// so that mean and max can share the same draws.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapDraws {
    /// `M` rows of `m` replicate statistics.
    pub replicates: Vec<Vec<f64>>,
    pub redraws: usize,
}

impl BootstrapDraws {
    pub fn aggregated(&self, agg: Aggregation) -> Vec<f64> {
        self.replicates.iter().map(|r| agg.apply(r)).collect()
    }

    pub fn null_distribution(&self, agg: Aggregation) -> Result<NullDistribution> {
        NullDistribution::new(self.aggregated(agg))
    }
}

/// Bootstrap repetitions under the standard null member at size `n × p`.
///
/// Each repetition draws `m + 1` samples; the last one plays the data and is
/// re-estimated and standardized. A pseudo-data sample whose estimation
/// fails is redrawn once before giving up.
pub fn bootstrap_replicates(
    n: usize,
    p: usize,
    cfg: &TestConfig,
    stream: RngStream,
) -> Result<BootstrapDraws> {
    cfg.validate()?;
    check_size(n, p)?;
    let rows: Vec<(Vec<f64>, bool)> = (0..cfg.big_m)
        .into_par_iter()
        .map(|j| {
            let rep = stream.substream(Phase::Bootstrap, j as u64);
            let mut rng = rep.substream(Phase::PseudoData, 0).rng();
            let pseudo = cfg.family.sample_standard(n, p, &mut rng)?;
            let (z, redrawn) = match estimate_and_standardize(&pseudo, &cfg.family) {
                Ok((_, z)) => (z, false),
                Err(e) if e.is_numeric() => {
                    let mut rng = rep.substream(Phase::Redraw, 0).rng();
                    let pseudo = cfg.family.sample_standard(n, p, &mut rng)?;
                    let (_, z) = estimate_and_standardize(&pseudo, &cfg.family).map_err(|e| {
                        Error::Estimation(format!(
                            "bootstrap repetition {j} failed after a redraw: {e}"
                        ))
                    })?;
                    (z, true)
                }
                Err(e) => return Err(e),
            };
            Ok((replicates_of(&z, cfg, rep)?, redrawn))
        })
        .collect::<Result<_>>()?;
    let redraws = rows.iter().filter(|(_, r)| *r).count();
    Ok(BootstrapDraws {
        replicates: rows.into_iter().map(|(r, _)| r).collect(),
        redraws,
    })
}

/// Critical point and the `M` aggregated null statistics.
pub fn bootstrap_critical(
    n: usize,
    p: usize,
    cfg: &TestConfig,
    stream: RngStream,
) -> Result<(f64, Vec<f64>)> {
    let draws = bootstrap_replicates(n, p, cfg, stream)?;
    let null = draws.aggregated(cfg.agg);
    let dist = NullDistribution::new(null.clone())?;
    Ok((dist.critical_point(cfg.alpha), null))
}

pub(crate) fn data_stream(seed: u64) -> RngStream {
    RngStream::new(seed, 0).substream(Phase::Data, 0)
}

pub(crate) fn bootstrap_stream(seed: u64) -> RngStream {
    RngStream::new(seed, 0).substream(Phase::Bootstrap, 0)
}

/// Decision for a statistic against a calibrated null.
pub fn decide(statistic: f64, null: &NullDistribution, alpha: f64) -> (f64, f64, bool) {
    let crit = null.critical_point(alpha);
    (crit, null.p_value(statistic), statistic > crit)
}

/// Runs the complete test on `x`.
pub fn run_test(x: &Sample, cfg: &TestConfig) -> Result<TestOutcome> {
    let start = Instant::now();
    let statistic = aggregate_statistic(x, cfg, data_stream(cfg.seed))?;
    let draws = bootstrap_replicates(x.n(), x.p(), cfg, bootstrap_stream(cfg.seed))?;
    let null = draws.null_distribution(cfg.agg)?;
    let (critical_point, p_value, reject) = decide(statistic, &null, cfg.alpha);
    Ok(TestOutcome {
        statistic,
        critical_point,
        p_value,
        reject,
        m: cfg.m,
        big_m: cfg.big_m,
        alpha: cfg.alpha,
        seed: cfg.seed,
        family: cfg.family.to_string(),
        kernel: cfg.kernel.to_string(),
        agg: cfg.agg.to_string(),
        n: x.n(),
        p: x.p(),
        wall_time_s: start.elapsed().as_secs_f64(),
        redraws: draws.redraws,
    })
}

/// BHEP normality test, calibrated by simulation from `N(0, I)`.
///
/// The statistic is affine invariant, so its null law does not depend on
/// the unknown mean and covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BhepConfig {
    pub beta: f64,
    pub big_m: usize,
    pub alpha: f64,
    pub seed: u64,
}

impl Default for BhepConfig {
    fn default() -> Self {
        BhepConfig {
            beta: 1.0,
            big_m: 1000,
            alpha: 0.05,
            seed: 0,
        }
    }
}

impl BhepConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::config(format!(
                "beta must be positive, got {}",
                self.beta
            )));
        }
        if self.big_m == 0 {
            return Err(Error::config("M must be at least 1"));
        }
        check_alpha(self.alpha)
    }
}

/// `M` BHEP statistics under the normal null, with the redraw count.
pub fn bhep_null(
    n: usize,
    p: usize,
    cfg: &BhepConfig,
    stream: RngStream,
) -> Result<(Vec<f64>, usize)> {
    cfg.validate()?;
    check_size(n, p)?;
    let rows: Vec<(f64, bool)> = (0..cfg.big_m)
        .into_par_iter()
        .map(|j| {
            let rep = stream.substream(Phase::BhepNull, j as u64);
            let y = Family::Normal.sample_standard(n, p, &mut rep.rng())?;
            match bhep_composite(&y, cfg.beta) {
                Ok(t) => Ok((t.value, false)),
                Err(e) if e.is_numeric() => {
                    let mut rng = rep.substream(Phase::Redraw, 0).rng();
                    let y = Family::Normal.sample_standard(n, p, &mut rng)?;
                    let t = bhep_composite(&y, cfg.beta).map_err(|e| {
                        Error::Estimation(format!("BHEP repetition {j} failed after a redraw: {e}"))
                    })?;
                    Ok((t.value, true))
                }
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    let redraws = rows.iter().filter(|(_, r)| *r).count();
    Ok((rows.into_iter().map(|(v, _)| v).collect(), redraws))
}

pub fn run_bhep_test(x: &Sample, cfg: &BhepConfig) -> Result<TestOutcome> {
    let start = Instant::now();
    cfg.validate()?;
    check_size(x.n(), x.p())?;
    let statistic = bhep_composite(x, cfg.beta)?.value;
    let (values, redraws) = bhep_null(x.n(), x.p(), cfg, bootstrap_stream(cfg.seed))?;
    let null = NullDistribution::new(values)?;
    let (critical_point, p_value, reject) = decide(statistic, &null, cfg.alpha);
    Ok(TestOutcome {
        statistic,
        critical_point,
        p_value,
        reject,
        m: 0,
        big_m: cfg.big_m,
        alpha: cfg.alpha,
        seed: cfg.seed,
        family: Family::Normal.to_string(),
        kernel: format!("bhep:{}", cfg.beta),
        agg: "bhep".into(),
        n: x.n(),
        p: x.p(),
        wall_time_s: start.elapsed().as_secs_f64(),
        redraws,
    })
}
