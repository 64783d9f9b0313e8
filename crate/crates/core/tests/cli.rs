use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ecfgof"))
}

fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(rel)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

#[test]
fn sample_writes_requested_shape() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("k.csv");
    let o = run(&[
        "sample",
        "--family",
        "kotz:2",
        "--n",
        "100",
        "--p",
        "3",
        "--seed",
        "4",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let x = ecfgof::harness::load_csv(&out).unwrap();
    assert_eq!((x.n(), x.p()), (100, 3));
    let again = run(&[
        "sample", "--family", "kotz:2", "--n", "100", "--p", "3", "--seed", "4",
    ]);
    assert_eq!(std::fs::read(&out).unwrap(), again.stdout);
}

#[test]
fn test_on_exam_marks_rejects() {
    let data = fixture("tests/data/exam_marks.csv");
    let o = run(&["test", "--data", data.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["reject"], true);
    assert_eq!(v["M"], 1000);
    assert_eq!(v["m"], 10);
    assert_eq!(v["n"], 88);
    assert_eq!(v["p"], 5);
    assert!(v["p_value"].as_f64().unwrap() < 0.05);
}

#[test]
fn test_writes_json_file_for_max_and_bhep() {
    let dir = tempfile::tempdir().unwrap();
    let data = fixture("tests/data/exam_marks.csv");
    for agg in ["max", "bhep"] {
        let out = dir.path().join(format!("{agg}.json"));
        let o = run(&[
            "test",
            "--data",
            data.to_str().unwrap(),
            "--agg",
            agg,
            "--big-m",
            "200",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
        assert_eq!(v["agg"], agg);
    }
}

#[test]
fn simulate_example4_has_one_row_per_cell() {
    let spec = fixture("../../specs/example4.toml");
    let o = run(&[
        "simulate",
        "--quiet",
        "--trials",
        "3",
        "--spec",
        spec.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "p,n,grid_value,test,rejection_rate,trials,mc_stderr,failures"
    );
    // 1 dimension × 3 sizes × 9 values of N × 2 tests
    assert_eq!(lines.count(), 54);
}

#[test]
fn shipped_specs_parse() {
    let dir = fixture("../../specs");
    let mut count = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            ecfgof::harness::ExperimentSpec::load(&path)
                .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            count += 1;
        }
    }
    assert!(count >= 8);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, body: &str| {
        let p = dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        p
    };
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["test"])), 1);
    assert_eq!(
        code(&run(&["test", "--data", "x.csv", "--family", "cauchy"])),
        1
    );
    assert_eq!(
        code(&run(&["test", "--data", "x.csv", "--alpha", "1.5"])),
        2,
        "missing file is reported first"
    );

    let missing = dir.path().join("missing.csv");
    assert_eq!(
        code(&run(&["test", "--data", missing.to_str().unwrap()])),
        2
    );

    let ragged = write("ragged.csv", "1,2\n3\n");
    let o = run(&["test", "--data", ragged.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("row 2"));

    let singular = write("singular.csv", "1,2\n2,4\n3,6\n4,8\n");
    assert_eq!(
        code(&run(&[
            "test",
            "--data",
            singular.to_str().unwrap(),
            "--big-m",
            "10"
        ])),
        3
    );

    let ok = write("ok.csv", "0.1,0.3\n-1,2\n0.5,-0.7\n2,0.1\n-0.3,-1.2\n");
    assert_eq!(
        code(&run(&[
            "test",
            "--data",
            ok.to_str().unwrap(),
            "--alpha",
            "1.5"
        ])),
        1
    );
    assert_eq!(
        code(&run(&["test", "--data", ok.to_str().unwrap(), "--m", "0"])),
        1
    );

    let bad_spec = write("bad.toml", "name = \"x\"\n");
    assert_eq!(
        code(&run(&["simulate", "--spec", bad_spec.to_str().unwrap()])),
        1
    );
}
