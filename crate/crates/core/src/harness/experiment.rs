//! Power studies driven by TOML specs.
//!
//! ```toml
//! name = "example1"
//! seed = 1
//! trials = 200
//! dims = [2]
//! sizes = [100]
//! alpha = 0.05
//! m = 10
//! big_m = 500
//! calibration = "shared"      # or "per-trial"
//! null = "normal"
//!
//! [generator]
//! kind = "studentt"           # see GeneratorKind
//! grid = [3, 5, 10, inf]
//!
//! [[tests]]
//! kind = "mean"               # mean | max | bhep
//! kernel = "gauss"
//! ```
//!
//! With `shared` calibration every `(p, n, test)` cell gets one bootstrap
//! null distribution that all trials and grid values reuse; `per-trial`
//! recalibrates for every dataset as the full procedure does. The null
//! distribution does not depend on the data generator, so both give valid
//! level-α tests; `per-trial` costs `trials` times more.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{
    bhep_null, bootstrap_replicates, replicate_statistics, Aggregation, BhepConfig,
    NullDistribution, TestConfig,
};
use crate::error::{Error, Result};
use crate::numerics::{SymPosDef, WeightKernel};
use crate::samplers::{
    derive_stream_id, sample_mvt, Alternative, Family, FamilySpec, Phase, RngStream, Sample,
};
use crate::statistics::bhep_composite;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Calibration {
    #[default]
    Shared,
    PerTrial,
}

impl FromStr for Calibration {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "shared" => Ok(Calibration::Shared),
            "per-trial" => Ok(Calibration::PerTrial),
            other => Err(Error::config(format!(
                "unknown calibration `{other}` (shared|per-trial)"
            ))),
        }
    }
}

/// Data generator indexed by one scalar grid parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GeneratorKind {
    /// The null family at `(0, I)`; the grid value is ignored.
    Null,
    /// `N_p(e_p, Σ_{0.5})` with `e_p = (1, …, p)`; grid ignored.
    ShiftedNormal,
    /// Student-t with `ν` = grid value (`inf` is the normal).
    StudentT,
    /// Kotz type with `N` = grid value.
    Kotz,
    /// Balanced normal location mixture with shift θ.
    NormalMixture,
    UniformCube,
    MarginalExp,
    /// `(1 − θ)·Laplace + θ·normal`.
    LaplaceNormal,
    /// Skew-t with slant `θ·1` and fixed degrees of freedom.
    SkewT {
        nu: f64,
    },
}

impl GeneratorKind {
    fn parse(kind: &str, nu: Option<f64>) -> Result<Self> {
        Ok(match kind.trim() {
            "null" => GeneratorKind::Null,
            "case1" | "shifted-normal" => GeneratorKind::ShiftedNormal,
            "studentt" => GeneratorKind::StudentT,
            "kotz" => GeneratorKind::Kotz,
            "nm" => GeneratorKind::NormalMixture,
            "uniform" => GeneratorKind::UniformCube,
            "mar-exp" => GeneratorKind::MarginalExp,
            "laplace-normal" => GeneratorKind::LaplaceNormal,
            "skewt" => GeneratorKind::SkewT {
                nu: nu.ok_or_else(|| Error::config("generator `skewt` needs `nu`"))?,
            },
            other => return Err(Error::config(format!("unknown generator kind `{other}`"))),
        })
    }

    fn uses_grid(&self) -> bool {
        !matches!(
            self,
            GeneratorKind::Null
                | GeneratorKind::ShiftedNormal
                | GeneratorKind::UniformCube
                | GeneratorKind::MarginalExp
        )
    }

    /// Checks that `g` is a legal parameter value.
    fn check(&self, g: f64, p: usize) -> Result<()> {
        let mut rng = RngStream::new(0, 0).rng();
        self.sample(g, &Family::Normal, p + 1, p, &mut rng)
            .map(|_| ())
    }

    pub fn sample<R: Rng + ?Sized>(
        &self,
        g: f64,
        null: &Family,
        n: usize,
        p: usize,
        rng: &mut R,
    ) -> Result<Sample> {
        match *self {
            GeneratorKind::Null => null.sample_standard(n, p, rng),
            GeneratorKind::ShiftedNormal => {
                let loc: Vec<f64> = (1..=p).map(|i| i as f64).collect();
                FamilySpec::new(Family::Normal, loc, SymPosDef::equicorrelation(p, 0.5)?)?
                    .sample(n, rng)
            }
            GeneratorKind::StudentT => {
                sample_mvt(n, &vec![0.0; p], &SymPosDef::identity(p), g, rng)
            }
            GeneratorKind::Kotz => Family::kotz(g)?.sample_standard(n, p, rng),
            GeneratorKind::NormalMixture => {
                Alternative::NormalMixture { theta: g }.sample(n, p, rng)
            }
            GeneratorKind::UniformCube => Alternative::UniformCube.sample(n, p, rng),
            GeneratorKind::MarginalExp => Alternative::MarginalExp.sample(n, p, rng),
            GeneratorKind::LaplaceNormal => {
                Alternative::LaplaceNormalMixture { theta: g }.sample(n, p, rng)
            }
            GeneratorKind::SkewT { nu } => Alternative::SkewT { theta: g, nu }.sample(n, p, rng),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TestKind {
    Ecf {
        agg: Aggregation,
        kernel: WeightKernel,
        m: usize,
    },
    Bhep {
        beta: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentTest {
    pub name: String,
    pub kind: TestKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub name: String,
    pub seed: u64,
    pub trials: usize,
    pub dims: Vec<usize>,
    pub sizes: Vec<usize>,
    pub alpha: f64,
    pub big_m: usize,
    pub calibration: Calibration,
    pub null: Family,
    pub generator: GeneratorKind,
    pub grid: Vec<f64>,
    pub tests: Vec<ExperimentTest>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    name: String,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_trials")]
    trials: usize,
    dims: Vec<usize>,
    sizes: Vec<usize>,
    #[serde(default = "default_alpha")]
    alpha: f64,
    #[serde(default = "default_m")]
    m: usize,
    #[serde(default = "default_big_m")]
    big_m: usize,
    #[serde(default)]
    calibration: Calibration,
    null: String,
    generator: RawGenerator,
    tests: Vec<RawTest>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGenerator {
    kind: String,
    #[serde(default)]
    grid: Vec<f64>,
    nu: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTest {
    kind: String,
    name: Option<String>,
    kernel: Option<String>,
    m: Option<usize>,
    beta: Option<f64>,
}

fn default_trials() -> usize {
    200
}

fn default_alpha() -> f64 {
    0.05
}

fn default_m() -> usize {
    10
}

fn default_big_m() -> usize {
    500
}

impl ExperimentSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawSpec =
            toml::from_str(text).map_err(|e| Error::config(format!("experiment spec: {e}")))?;
        let null: Family = raw.null.parse()?;
        let generator = GeneratorKind::parse(&raw.generator.kind, raw.generator.nu)?;
        let grid = if generator.uses_grid() {
            raw.generator.grid
        } else if raw.generator.grid.is_empty() {
            vec![0.0]
        } else {
            raw.generator.grid
        };
        let tests = raw
            .tests
            .iter()
            .map(|t| resolve_test(t, raw.m))
            .collect::<Result<Vec<_>>>()?;
        let spec = ExperimentSpec {
            name: raw.name,
            seed: raw.seed,
            trials: raw.trials,
            dims: raw.dims,
            sizes: raw.sizes,
            alpha: raw.alpha,
            big_m: raw.big_m,
            calibration: raw.calibration,
            null,
            generator,
            grid,
            tests,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::config("trials must be at least 1"));
        }
        if self.dims.is_empty()
            || self.sizes.is_empty()
            || self.grid.is_empty()
            || self.tests.is_empty()
        {
            return Err(Error::config(
                "dims, sizes, grid and tests must be nonempty",
            ));
        }
        if self.big_m == 0 {
            return Err(Error::config("big_m must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(Error::config(format!(
                "alpha must lie in [0, 1), got {}",
                self.alpha
            )));
        }
        self.null.validate()?;
        for &p in &self.dims {
            if p == 0 {
                return Err(Error::config("dimensions must be positive"));
            }
            for &n in &self.sizes {
                if n < p + 1 {
                    return Err(Error::config(format!(
                        "sample size {n} too small for p = {p}"
                    )));
                }
            }
            for &g in &self.grid {
                self.generator
                    .check(g, p)
                    .map_err(|e| Error::config(format!("grid value {g}: {e}")))?;
            }
        }
        let mut names: Vec<&str> = self.tests.iter().map(|t| t.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::config("test names must be unique"));
        }
        for t in &self.tests {
            match t.kind {
                TestKind::Ecf { m: 0, .. } => return Err(Error::config("m must be at least 1")),
                TestKind::Bhep { .. } if self.null != Family::Normal => {
                    return Err(Error::config("the BHEP test only applies to a normal null"))
                }
                _ => {}
            }
        }
        Ok(())
    }
}

fn resolve_test(t: &RawTest, default_m: usize) -> Result<ExperimentTest> {
    match t.kind.trim() {
        "bhep" => {
            let beta = t.beta.unwrap_or(1.0);
            if !(beta > 0.0 && beta.is_finite()) {
                return Err(Error::config(format!("beta must be positive, got {beta}")));
            }
            let name = t.name.clone().unwrap_or_else(|| {
                if beta == 1.0 {
                    "bhep".into()
                } else {
                    format!("bhep:{beta}")
                }
            });
            Ok(ExperimentTest {
                name,
                kind: TestKind::Bhep { beta },
            })
        }
        agg => {
            let agg: Aggregation = agg.parse()?;
            let kernel: WeightKernel = match &t.kernel {
                Some(k) => k.parse()?,
                None => WeightKernel::Gaussian,
            };
            let m = t.m.unwrap_or(default_m);
            let name = t.name.clone().unwrap_or_else(|| {
                let mut s = agg.to_string();
                if kernel != WeightKernel::Gaussian {
                    s.push_str(&format!(":{kernel}"));
                }
                if t.m.is_some() {
                    s.push_str(&format!(":m{m}"));
                }
                s
            });
            Ok(ExperimentTest {
                name,
                kind: TestKind::Ecf { agg, kernel, m },
            })
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Worker threads; `0` uses the rayon default.
    pub workers: usize,
    pub progress: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerRow {
    pub p: usize,
    pub n: usize,
    pub grid_value: f64,
    pub test: String,
    pub rejection_rate: f64,
    pub trials: usize,
    pub mc_stderr: f64,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PowerTable {
    pub rows: Vec<PowerRow>,
}

impl PowerTable {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let io = |e: csv::Error| Error::Io {
            path: "<power table>".into(),
            source: e.into(),
        };
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row).map_err(io)?;
        }
        w.flush().map_err(|source| Error::Io {
            path: "<power table>".into(),
            source,
        })
    }

    pub fn get(&self, p: usize, n: usize, grid_value: f64, test: &str) -> Option<&PowerRow> {
        self.rows
            .iter()
            .find(|r| r.p == p && r.n == n && r.grid_value == grid_value && r.test == test)
    }
}

impl fmt::Display for PowerTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:>3} {:>5} {:>8} {:>16} {:>7} {:>7}",
            "p", "n", "grid", "test", "rate", "se"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:>3} {:>5} {:>8} {:>16} {:>7.3} {:>7.3}",
                r.p, r.n, r.grid_value, r.test, r.rejection_rate, r.mc_stderr
            )?;
        }
        Ok(())
    }
}

/// Null calibration for one test at one `(p, n)`.
enum Null {
    Ecf {
        mean: NullDistribution,
        max: NullDistribution,
    },
    Bhep(NullDistribution),
}

impl Null {
    fn pick(&self, kind: &TestKind) -> &NullDistribution {
        match (self, kind) {
            (
                Null::Ecf { mean, .. },
                TestKind::Ecf {
                    agg: Aggregation::Mean,
                    ..
                },
            ) => mean,
            (
                Null::Ecf { max, .. },
                TestKind::Ecf {
                    agg: Aggregation::Max,
                    ..
                },
            ) => max,
            (Null::Bhep(d), _) => d,
            _ => unreachable!("calibration does not match test kind"),
        }
    }
}

/// Tests that share draws: mean and max with the same kernel and `m`.
fn calibration_groups(tests: &[ExperimentTest]) -> (Vec<TestKind>, Vec<usize>) {
    let mut keys: Vec<TestKind> = Vec::new();
    let mut index = Vec::with_capacity(tests.len());
    for t in tests {
        let key = match t.kind {
            TestKind::Ecf { kernel, m, .. } => TestKind::Ecf {
                agg: Aggregation::Mean,
                kernel,
                m,
            },
            ref b => b.clone(),
        };
        let pos = keys.iter().position(|k| *k == key).unwrap_or_else(|| {
            keys.push(key);
            keys.len() - 1
        });
        index.push(pos);
    }
    (keys, index)
}

struct Cell<'a> {
    spec: &'a ExperimentSpec,
    p: usize,
    n: usize,
}

impl Cell<'_> {
    fn ecf_config(&self, kernel: WeightKernel, m: usize, seed: u64) -> TestConfig {
        TestConfig {
            family: self.spec.null,
            kernel,
            m,
            big_m: self.spec.big_m,
            alpha: self.spec.alpha,
            agg: Aggregation::Mean,
            seed,
        }
    }

    fn calibrate(&self, group: &TestKind, stream: RngStream) -> Result<Null> {
        match *group {
            TestKind::Ecf { kernel, m, .. } => {
                let cfg = self.ecf_config(kernel, m, stream.master_seed);
                let draws = bootstrap_replicates(self.n, self.p, &cfg, stream)?;
                Ok(Null::Ecf {
                    mean: draws.null_distribution(Aggregation::Mean)?,
                    max: draws.null_distribution(Aggregation::Max)?,
                })
            }
            TestKind::Bhep { beta } => {
                let cfg = BhepConfig {
                    beta,
                    big_m: self.spec.big_m,
                    alpha: self.spec.alpha,
                    seed: stream.master_seed,
                };
                let (values, _) = bhep_null(self.n, self.p, &cfg, stream)?;
                Ok(Null::Bhep(NullDistribution::new(values)?))
            }
        }
    }

    /// Data statistics of one dataset for every calibration group: the `m`
    /// replicates for ECF groups, the closed form for BHEP.
    fn statistics(&self, x: &Sample, group: &TestKind, stream: RngStream) -> Result<Vec<f64>> {
        match *group {
            TestKind::Ecf { kernel, m, .. } => {
                replicate_statistics(x, &self.ecf_config(kernel, m, stream.master_seed), stream)
            }
            TestKind::Bhep { beta } => Ok(vec![bhep_composite(x, beta)?.value]),
        }
    }
}

/// Outcome of one trial: per test, `Some(reject)` or `None` on failure.
type TrialResult = Vec<Option<bool>>;

/// Runs the spec on a dedicated pool of `opts.workers` threads.
///
/// Every dataset and calibration draws from streams keyed by
/// `(seed, p, n, trial)`, so the table does not depend on the worker count.
pub fn run_experiment(spec: &ExperimentSpec, opts: &RunOptions) -> Result<PowerTable> {
    spec.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers)
        .build()
        .map_err(|e| Error::config(format!("worker pool: {e}")))?;
    pool.install(|| run_in_pool(spec, opts))
}

fn run_in_pool(spec: &ExperimentSpec, opts: &RunOptions) -> Result<PowerTable> {
    let root = RngStream::new(spec.seed, 0);
    let (groups, group_of) = calibration_groups(&spec.tests);
    let mut table = PowerTable::default();
    for &p in &spec.dims {
        for &n in &spec.sizes {
            let cell = Cell { spec, p, n };
            let cell_stream = RngStream::new(spec.seed, derive_stream_id(&[p as u64, n as u64]));
            let shared: Option<Vec<Null>> = match spec.calibration {
                Calibration::Shared => Some(
                    groups
                        .iter()
                        .enumerate()
                        .map(|(gi, g)| {
                            cell.calibrate(g, cell_stream.substream(Phase::Bootstrap, gi as u64))
                        })
                        .collect::<Result<_>>()?,
                ),
                Calibration::PerTrial => None,
            };
            for &g in &spec.grid {
                let started = std::time::Instant::now();
                let results: Vec<TrialResult> = (0..spec.trials)
                    .into_par_iter()
                    .map(|t| {
                        let trial = root.substream(
                            Phase::Trial,
                            derive_stream_id(&[p as u64, n as u64, t as u64]),
                        );
                        run_trial(&cell, g, trial, &groups, &group_of, shared.as_deref())
                    })
                    .collect();
                for (ti, test) in spec.tests.iter().enumerate() {
                    let failures = results.iter().filter(|r| r[ti].is_none()).count();
                    if failures * 100 > spec.trials {
                        return Err(Error::Experiment(format!(
                            "{failures} of {} trials failed for test {} at p = {p}, n = {n}, grid value {g}",
                            spec.trials, test.name
                        )));
                    }
                    let ok = spec.trials - failures;
                    let rejections = results.iter().filter(|r| r[ti] == Some(true)).count();
                    let rate = if ok == 0 {
                        0.0
                    } else {
                        rejections as f64 / ok as f64
                    };
                    table.rows.push(PowerRow {
                        p,
                        n,
                        grid_value: g,
                        test: test.name.clone(),
                        rejection_rate: rate,
                        trials: spec.trials,
                        mc_stderr: (rate * (1.0 - rate) / spec.trials as f64).sqrt(),
                        failures,
                    });
                }
                if opts.progress {
                    eprintln!(
                        "[{}] p={p} n={n} grid={g}: {} trials in {:.1}s",
                        spec.name,
                        spec.trials,
                        started.elapsed().as_secs_f64()
                    );
                }
            }
        }
    }
    Ok(table)
}

fn run_trial(
    cell: &Cell<'_>,
    g: f64,
    trial: RngStream,
    groups: &[TestKind],
    group_of: &[usize],
    shared: Option<&[Null]>,
) -> TrialResult {
    let tests = &cell.spec.tests;
    let failed = || vec![None; tests.len()];
    let mut rng = trial.substream(Phase::Data, 0).rng();
    let x = match cell
        .spec
        .generator
        .sample(g, &cell.spec.null, cell.n, cell.p, &mut rng)
    {
        Ok(x) => x,
        Err(_) => return failed(),
    };
    let per_group: Vec<Option<(Vec<f64>, Option<Null>)>> = groups
        .iter()
        .enumerate()
        .map(|(gi, group)| {
            let stats = cell
                .statistics(&x, group, trial.substream(Phase::Replicate, gi as u64))
                .ok()?;
            let null = match shared {
                Some(_) => None,
                None => Some(
                    cell.calibrate(group, trial.substream(Phase::Bootstrap, gi as u64))
                        .ok()?,
                ),
            };
            Some((stats, null))
        })
        .collect();
    tests
        .iter()
        .zip(group_of)
        .map(|(test, &gi)| {
            let (stats, own) = per_group[gi].as_ref()?;
            let null = match shared {
                Some(s) => &s[gi],
                None => own.as_ref()?,
            }
            .pick(&test.kind);
            let statistic = match test.kind {
                TestKind::Ecf { agg, .. } => agg.apply(stats),
                TestKind::Bhep { .. } => stats[0],
            };
            Some(statistic > null.critical_point(cell.spec.alpha))
        })
        .collect()
}
