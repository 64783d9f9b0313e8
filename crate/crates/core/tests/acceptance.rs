//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.
//!
//! Run a subset by id or name fragment:
//! `cargo test --test acceptance -- 3 determinism`

use std::panic::{self, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use ecfgof::engine::{run_bhep_test, run_test, Aggregation, BhepConfig, TestConfig};
use ecfgof::estimators::{estimate_and_standardize, moment_estimate};
use ecfgof::harness::{load_csv, run_experiment, ExperimentSpec, PowerTable, RunOptions};
use ecfgof::samplers::Phase;
use ecfgof::statistics::{t2_integral_oracle, t_psi_composite, t_psi_simple};
use ecfgof::{Family, Matrix, RngStream, Sample, SymPosDef, WeightKernel};
use rand::Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn repo_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(rel)
}

fn kernels() -> [WeightKernel; 3] {
    [
        WeightKernel::Gaussian,
        WeightKernel::stable(1.0).unwrap(),
        WeightKernel::gen_laplace(1.0).unwrap(),
    ]
}

fn random_full_rank(p: usize, rng: &mut impl Rng) -> Matrix {
    loop {
        let a = Matrix::from_row_major(
            p,
            p,
            (0..p * p).map(|_| rng.random_range(-2.0..2.0)).collect(),
        )
        .unwrap();
        let gram = SymPosDef::from_matrix(&a.matmul(&a.transpose())).unwrap();
        if gram.min_eigenvalue() > 1e-2 {
            return a;
        }
    }
}

fn random_data(n: usize, p: usize, rng: &mut impl Rng) -> Sample {
    let a = random_full_rank(p, rng);
    let loc: Vec<f64> = (0..p).map(|_| rng.random_range(-3.0..3.0)).collect();
    Family::Laplace
        .sample_standard(n, p, rng)
        .unwrap()
        .affine(&a, &loc)
        .unwrap()
}

/// 1. Integral identity against the Monte Carlo oracle.
fn oracle_equivalence() -> Verdict {
    let n = 20;
    let n_mc = 1_000_000;
    let mut rng = RngStream::new(2024, 1).rng();
    let (mut ok, mut total, mut worst) = (0, 0, 0.0f64);
    for pair in 0..20u64 {
        let p = if pair % 2 == 0 { 2 } else { 3 };
        let x = random_data(n, p, &mut rng);
        let x0 = Family::Normal.sample_standard(n, p, &mut rng).unwrap();
        let (theta, z) = estimate_and_standardize(&x, &Family::Normal).unwrap();
        for (ki, k) in kernels().iter().enumerate() {
            let t = t_psi_composite(&x, &x0, &theta, k).unwrap().value;
            let stream = RngStream::new(2024, 100).substream(Phase::Oracle, pair * 3 + ki as u64);
            let est = t2_integral_oracle(&z, &x0, k, n_mc, stream).unwrap();
            let (implied, se) = est.implied_statistic(n);
            let score = (implied - t).abs() / se;
            worst = worst.max(score);
            total += 1;
            if score <= 3.0 {
                ok += 1;
            }
        }
    }
    verdict(
        ok == total,
        format!(
            "{ok}/{total} (pair, kernel) cases within 3 SE at n_mc = 1e6; largest |z| = {worst:.2}"
        ),
    )
}

/// 2. Translation invariance, rotation identity, estimator equivariance.
fn exact_invariances() -> Verdict {
    let mut rng = RngStream::new(7, 2).rng();
    let mut worst_tr = 0.0f64;
    let mut worst_rot = 0.0f64;
    let mut worst_eq = 0.0f64;
    for rep in 0..50 {
        let p = [2, 3, 5][rep % 3];
        let n = 30;
        let x = random_data(n, p, &mut rng);
        let x0 = Family::Normal.sample_standard(n, p, &mut rng).unwrap();
        let fam = Family::Normal;
        let theta = moment_estimate(&x, &fam).unwrap();

        let b: Vec<f64> = (0..p).map(|_| rng.random_range(-10.0..10.0)).collect();
        let xb = x.translate(&b).unwrap();
        let theta_b = moment_estimate(&xb, &fam).unwrap();
        for k in kernels() {
            let a = t_psi_composite(&x, &x0, &theta, &k).unwrap().value;
            let c = t_psi_composite(&xb, &x0, &theta_b, &k).unwrap().value;
            worst_tr = worst_tr.max((a - c).abs());
        }

        let a = random_full_rank(p, &mut rng);
        let ax = x.linear_map(&a).unwrap();
        let theta_a = moment_estimate(&ax, &fam).unwrap();
        let avat = SymPosDef::from_matrix(&a.matmul(theta.scatter.matrix()).matmul(&a.transpose()))
            .unwrap();
        let u = theta
            .scatter
            .sqrt()
            .matrix()
            .matmul(&a.transpose())
            .matmul(avat.inv_sqrt().unwrap().matrix());
        let ux0 = x0.linear_map(&u).unwrap();
        for k in kernels() {
            let lhs = t_psi_composite(&ax, &x0, &theta_a, &k).unwrap().value;
            let rhs = t_psi_composite(&x, &ux0, &theta, &k).unwrap().value;
            worst_rot = worst_rot.max((lhs - rhs).abs());
        }

        let shift: Vec<f64> = (0..p).map(|_| rng.random_range(-5.0..5.0)).collect();
        let y = x.affine(&a, &shift).unwrap();
        for fam in [
            Family::Normal,
            Family::student_t(12.0).unwrap(),
            Family::kotz(2.0).unwrap(),
        ] {
            let tx = moment_estimate(&x, &fam).unwrap();
            let ty = moment_estimate(&y, &fam).unwrap();
            let mut loc = a.mul_vec(&tx.location);
            loc.iter_mut().zip(&shift).for_each(|(v, s)| *v += s);
            let scale = 1.0 + loc.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for (u, v) in ty.location.iter().zip(&loc) {
                worst_eq = worst_eq.max((u - v).abs() / scale);
            }
            let v = a.matmul(tx.scatter.matrix()).matmul(&a.transpose());
            worst_eq = worst_eq.max(ty.scatter.matrix().sub(&v).max_abs() / v.max_abs().max(1.0));
        }
    }
    verdict(
        worst_tr <= 1e-12 && worst_rot <= 1e-9 && worst_eq <= 1e-10,
        format!(
            "translation {worst_tr:.1e} (≤ 1e-12), rotation over 50 A {worst_rot:.1e} (≤ 1e-9), \
             equivariance {worst_eq:.1e} (≤ 1e-10)"
        ),
    )
}

/// 3. Coincident samples attain the floor −2n/(n−1).
fn coincidence_floor() -> Verdict {
    let mut rng = RngStream::new(3, 3).rng();
    let mut worst = 0.0f64;
    for n in [2usize, 5, 50] {
        for p in [1usize, 2, 4] {
            let x = Family::Laplace.sample_standard(n, p, &mut rng).unwrap();
            for k in kernels() {
                let t = t_psi_simple(&x, &x, &k).unwrap().value;
                worst = worst.max((t + 2.0 * n as f64 / (n - 1) as f64).abs());
            }
        }
    }
    verdict(
        worst <= 1e-12,
        format!("largest deviation from -2n/(n-1): {worst:.1e}"),
    )
}

fn simulate(toml: &str) -> PowerTable {
    let spec = ExperimentSpec::from_toml_str(toml).unwrap();
    run_experiment(&spec, &RunOptions::default()).unwrap()
}

/// 4. Size control with per-trial bootstrap calibration.
fn size_control() -> Verdict {
    let mut lines = Vec::new();
    let mut pass = true;
    for (i, fam) in ["normal", "laplace", "studentt:12", "kotz:2"]
        .iter()
        .enumerate()
    {
        let table = simulate(&format!(
            r#"
            name = "size-{fam}"
            seed = {seed}
            trials = 200
            dims = [2]
            sizes = [50]
            m = 10
            big_m = 500
            calibration = "per-trial"
            null = "{fam}"
            [generator]
            kind = "null"
            [[tests]]
            kind = "mean"
            [[tests]]
            kind = "max"
            "#,
            seed = 400 + i
        ));
        for r in &table.rows {
            let ok = (0.02..=0.09).contains(&r.rejection_rate);
            pass &= ok;
            lines.push(format!("{fam}/{} {:.3}", r.test, r.rejection_rate));
        }
    }
    verdict(pass, format!("rates in [0.02, 0.09]: {}", lines.join(", ")))
}

fn example_spec(name: &str, null: &str, generator: &str, seed: u64, tests: &str) -> String {
    format!(
        r#"
        name = "{name}"
        seed = {seed}
        trials = 200
        dims = [2]
        sizes = [100]
        m = 10
        big_m = 500
        null = "{null}"
        [generator]
        {generator}
        {tests}
        "#
    )
}

const MEAN_MAX: &str = "[[tests]]\nkind = \"mean\"\n[[tests]]\nkind = \"max\"";

/// 5. Power orderings for Examples 1, 3 and 4.
fn power_orderings() -> Verdict {
    let mut pass = true;
    let mut lines = Vec::new();
    let ex1 = simulate(&example_spec(
        "ex1",
        "normal",
        "kind = \"studentt\"\ngrid = [3, inf]",
        501,
        MEAN_MAX,
    ));
    for test in ["mean", "max"] {
        let d = ex1.get(2, 100, 3.0, test).unwrap().rejection_rate
            - ex1.get(2, 100, f64::INFINITY, test).unwrap().rejection_rate;
        pass &= d >= 0.2;
        lines.push(format!("ex1 {test} Δ={d:.3}"));
    }
    let ex3 = simulate(&example_spec(
        "ex3",
        "studentt:12",
        "kind = \"skewt\"\nnu = 12\ngrid = [0, 6]",
        503,
        MEAN_MAX,
    ));
    for test in ["mean", "max"] {
        let d = ex3.get(2, 100, 6.0, test).unwrap().rejection_rate
            - ex3.get(2, 100, 0.0, test).unwrap().rejection_rate;
        pass &= d >= 0.2;
        lines.push(format!("ex3 {test} Δ={d:.3}"));
    }
    let ex4 = simulate(&example_spec(
        "ex4",
        "kotz:2",
        "kind = \"kotz\"\ngrid = [5]",
        504,
        MEAN_MAX,
    ));
    let r = ex4.get(2, 100, 5.0, "mean").unwrap().rejection_rate;
    pass &= r > 0.05 + 0.05;
    lines.push(format!("ex4 mean power(N=5)={r:.3} (> 0.10)"));
    verdict(pass, format!("{} (Δ ≥ 0.2)", lines.join(", ")))
}

/// 6. Exam marks: normality is rejected by the mean test and by BHEP.
fn real_data() -> Verdict {
    let x = load_csv(repo_path("tests/data/exam_marks.csv")).unwrap();
    let shape_ok = x.n() == 88 && x.p() == 5;
    let cfg = TestConfig {
        family: Family::Normal,
        kernel: WeightKernel::Gaussian,
        m: 10,
        big_m: 2000,
        alpha: 0.05,
        agg: Aggregation::Mean,
        seed: 6,
    };
    let mean = run_test(&x, &cfg).unwrap();
    let bhep = run_bhep_test(
        &x,
        &BhepConfig {
            beta: 1.0,
            big_m: 2000,
            alpha: 0.05,
            seed: 6,
        },
    )
    .unwrap();
    verdict(
        shape_ok && mean.p_value < 0.01 && bhep.p_value < 0.01 && mean.reject && bhep.reject,
        format!(
            "n={} p={}; mean-test p = {:.4}, BHEP p = {:.4} (< 0.01)",
            x.n(),
            x.p(),
            mean.p_value,
            bhep.p_value
        ),
    )
}

/// 7. Sampler moments and the Kotz N = 1 / normal agreement.
fn sampler_moments() -> Verdict {
    let n = 100_000;
    let p = 3;
    let mut pass = true;
    let mut worst = 0.0f64;
    for (i, fam) in [
        Family::Normal,
        Family::Laplace,
        Family::student_t(12.0).unwrap(),
        Family::kotz(2.0).unwrap(),
    ]
    .iter()
    .enumerate()
    {
        let x = fam
            .sample_standard(n, p, &mut RngStream::new(70, i as u64).rng())
            .unwrap();
        let c = fam.covariance_multiplier(p);
        let mean = x.mean();
        let s = x.covariance();
        for a in 0..p {
            for b in a..p {
                let prods: Vec<f64> = x
                    .rows()
                    .map(|r| (r[a] - mean[a]) * (r[b] - mean[b]))
                    .collect();
                let m = prods.iter().sum::<f64>() / n as f64;
                let var = prods.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64;
                let se = (var / n as f64).sqrt();
                let target = if a == b { c } else { 0.0 };
                let z = (s[(a, b)] - target).abs() / se;
                worst = worst.max(z);
                pass &= z <= 3.0;
            }
        }
    }

    // Kotz with N = 1 against the normal: compare the two-sample statistic
    // with the 99% point of its normal-vs-normal null distribution.
    let m = 500;
    let k = WeightKernel::Gaussian;
    let base = RngStream::new(71, 0);
    let mut null: Vec<f64> = (0..200u64)
        .map(|r| {
            let s = base.substream(Phase::Replicate, r);
            let a = Family::Normal
                .sample_standard(m, p, &mut s.substream(Phase::Data, 0).rng())
                .unwrap();
            let b = Family::Normal
                .sample_standard(m, p, &mut s.substream(Phase::Data, 1).rng())
                .unwrap();
            t_psi_simple(&a, &b, &k).unwrap().value
        })
        .collect();
    null.sort_by(f64::total_cmp);
    let threshold = null[197];
    let kotz = Family::kotz(1.0)
        .unwrap()
        .sample_standard(m, p, &mut base.substream(Phase::Trial, 0).rng())
        .unwrap();
    let normal = Family::Normal
        .sample_standard(m, p, &mut base.substream(Phase::Trial, 1).rng())
        .unwrap();
    let dist = t_psi_simple(&kotz, &normal, &k).unwrap().value;
    let kotz_ok = dist <= threshold;
    verdict(
        pass && kotz_ok,
        format!(
            "covariance entries: largest |z| = {worst:.2} (≤ 3); Kotz(N=1) vs normal T = {dist:.4}, \
             null 99% point {threshold:.4}"
        ),
    )
}

/// 8. BHEP against the mean test at Example 1, ν = 5 (soft trend check).
fn bhep_relationship() -> Verdict {
    let table = simulate(
        r#"
        name = "bhep-vs-mean"
        seed = 801
        trials = 500
        dims = [2]
        sizes = [20, 100]
        m = 10
        big_m = 500
        null = "normal"
        [generator]
        kind = "studentt"
        grid = [5]
        [[tests]]
        kind = "mean"
        [[tests]]
        kind = "bhep"
        "#,
    );
    let get = |n, t: &str| {
        let r = table.get(2, n, 5.0, t).unwrap();
        (r.rejection_rate, r.mc_stderr)
    };
    let mut pass = true;
    let mut lines = Vec::new();
    let mut gaps = Vec::new();
    for n in [20usize, 100] {
        let (b, sb) = get(n, "bhep");
        let (m, sm) = get(n, "mean");
        let se = (sb * sb + sm * sm).sqrt();
        pass &= b >= m - 3.0 * se;
        lines.push(format!("n={n}: BHEP {b:.3} vs mean {m:.3}"));
        gaps.push((b - m, se));
    }
    let growth = gaps[1].0 - gaps[0].0;
    let se = (gaps[0].1.powi(2) + gaps[1].1.powi(2)).sqrt();
    let shrink_ok = growth <= 3.0 * se;
    pass &= shrink_ok;
    verdict(
        pass,
        format!(
            "{}; gap growth n=20→100 {growth:.3} vs 3 SE {:.3}",
            lines.join(", "),
            3.0 * se
        ),
    )
}

/// 9. `simulate` output is byte-identical across runs and worker counts.
fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let spec = repo_path("../../specs/example4.toml");
    let mut outputs = Vec::new();
    for workers in ["1", "8"] {
        for run in 0..2 {
            let out = dir.path().join(format!("w{workers}-{run}.csv"));
            let status = Command::new(env!("CARGO_BIN_EXE_ecfgof"))
                .args([
                    "simulate",
                    "--quiet",
                    "--trials",
                    "20",
                    "--workers",
                    workers,
                    "--spec",
                ])
                .arg(&spec)
                .arg("--out")
                .arg(&out)
                .status()
                .unwrap();
            assert!(status.success());
            outputs.push(std::fs::read(&out).unwrap());
        }
    }
    let same = outputs.windows(2).all(|w| w[0] == w[1]);
    verdict(
        same && !outputs[0].is_empty(),
        format!(
            "4 runs (workers 1 and 8, twice each), {} bytes, identical = {same}",
            outputs[0].len()
        ),
    )
}

type Criterion = (u32, &'static str, fn() -> Verdict);

fn main() {
    let filters: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let criteria: [Criterion; 9] = [
        (1, "oracle equivalence", oracle_equivalence),
        (2, "exact invariances", exact_invariances),
        (3, "coincidence floor", coincidence_floor),
        (4, "size control", size_control),
        (5, "power orderings", power_orderings),
        (6, "real data", real_data),
        (7, "sampler moments", sampler_moments),
        (8, "BHEP relationship", bhep_relationship),
        (9, "determinism", determinism),
    ];
    let mut failed = Vec::new();
    let mut ran = 0;
    for (id, name, check) in criteria {
        if !filters.is_empty()
            && !filters
                .iter()
                .any(|f| *f == id.to_string() || name.contains(f.as_str()))
        {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let v = panic::catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|_| verdict(false, "panicked"));
        println!(
            "{} criterion {id} ({name}): {} [{:.1}s]",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail,
            start.elapsed().as_secs_f64()
        );
        if !v.pass {
            failed.push(id);
        }
    }
    println!(
        "acceptance: {} of {ran} criteria passed",
        ran - failed.len()
    );
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
