use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_periodic-evans"))
}

fn problem(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../problems")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn write_problem(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

#[test]
fn describe_reports_unit_margin_for_free_problem() {
    let p = problem("free_scalar.json");
    let out = run(&["describe", "--problem", p.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["n"], 1);
    assert_eq!(v["definiteness_margin"], 1.0);
    assert_eq!(v["definiteness_sign"], 1);
    assert_eq!(v["normalized"], true);
}

#[test]
fn help_exits_zero_and_bad_flags_exit_one() {
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["evans", "--help"])), 0);
    assert_eq!(code(&run(&[])), 1);
    assert_eq!(code(&run(&["evans", "--bogus"])), 1);
    let p = problem("free_scalar.json");
    let p = p.to_str().unwrap();
    assert_eq!(
        code(&run(&[
            "evans",
            "--problem",
            p,
            "--lambda",
            "1",
            "--tol",
            "1e-2"
        ])),
        1
    );
    assert_eq!(code(&run(&["evans", "--problem", p])), 1);
    assert_eq!(
        code(&run(&["det", "--problem", p, "--lambda", "1", "--J", "0"])),
        1
    );
    assert_eq!(code(&run(&["hill", "--problem", p, "--J", "16,8"])), 1);
}

#[test]
fn invalid_problems_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let indefinite = write_problem(
        dir.path(),
        "indefinite.json",
        r#"{"n": 1, "period": "2pi", "A1": [], "A0": [],
            "B0": [{"k": 0, "re": [[0.5]]}, {"k": 1, "re": [[0.5]]}, {"k": -1, "re": [[0.5]]}]}"#,
    );
    let out = run(&["describe", "--problem", indefinite.to_str().unwrap()]);
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));

    let mismatch = write_problem(
        dir.path(),
        "mismatch.json",
        r#"{"n": 2, "period": "2pi", "A1": [], "A0": [], "B0": [{"k": 0, "re": [[1.0]]}]}"#,
    );
    assert_eq!(
        code(&run(&["describe", "--problem", mismatch.to_str().unwrap()])),
        2
    );

    // Unreadable or malformed input is a configuration error.
    let garbage = write_problem(dir.path(), "garbage.json", "{not json");
    assert_eq!(
        code(&run(&["describe", "--problem", garbage.to_str().unwrap()])),
        1
    );
}

#[test]
fn numerical_failure_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_problem(
        dir.path(),
        "stiff.json",
        r#"{"n": 2, "period": "2pi", "A1": [], "A0": [],
            "B0": [{"k": 0, "re": [[1e6, 0.0], [0.0, 1e-9]]}]}"#,
    );
    let out = run(&["hill", "--problem", p.to_str().unwrap(), "--J", "2"]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("hill_galerkin"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let p = problem("mathieu_q0.5.json");
    let mut outputs = Vec::new();
    for i in 0..2 {
        let path = dir.path().join(format!("evans{i}.csv"));
        let out = run(&[
            "evans",
            "--problem",
            p.to_str().unwrap(),
            "--grid=-1,1,-0.5,0.5,3,2",
            "--output",
            path.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0);
        outputs.push(fs::read(&path).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let text = String::from_utf8(outputs.remove(0)).unwrap();
    assert!(text.starts_with("re,im,re_E,im_E,abel_residual,steps\n"));
    assert_eq!(text.lines().count(), 1 + 6);
}

#[test]
fn failed_run_leaves_no_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.json");
    let out = run(&[
        "evans",
        "--problem",
        dir.path().join("missing.json").to_str().unwrap(),
        "--lambda",
        "1",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);
    assert!(!path.exists());
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn free_determinant_at_first_truncation() {
    let p = problem("free_scalar.json");
    let out = run(&[
        "det",
        "--problem",
        p.to_str().unwrap(),
        "--lambda",
        "1",
        "--J",
        "1",
        "--format",
        "csv",
    ]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let row: Vec<f64> = text
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .map(|t| t.parse().unwrap())
        .collect();
    // D_1(1) = 1 exactly: K_1 vanishes when lambda B0 = I.
    assert!(row[3].abs() < 1e-14 && row[4].abs() < 1e-14);
}

#[test]
fn verify_reports_corrected_convergence_on_mathieu() {
    let p = problem("mathieu_q0.5.json");
    let out = run(&[
        "verify",
        "--problem",
        p.to_str().unwrap(),
        "--J",
        "8,16,32",
        "--lambda",
        "0.1+0.2i",
    ]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let series = v["series"].as_array().unwrap();
    let corrected = series
        .iter()
        .find(|s| {
            s["quantity"] == "r1" && s["convention"] == "corrected" && s["delta_reading"] == "a0"
        })
        .unwrap();
    assert_eq!(corrected["decreasing"], true);
    assert_eq!(corrected["final_within_tol"], true);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("r1 corrected"));
}

#[test]
fn verify_at_an_eigenvalue_is_rejected() {
    let p = problem("free_scalar.json");
    let out = run(&[
        "verify",
        "--problem",
        p.to_str().unwrap(),
        "--J",
        "8",
        "--lambda=-1",
    ]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("bridge_constants"));
}

#[test]
fn locate_mathieu_with_hill_and_fredholm() {
    let p = problem("mathieu_q0.5.json");
    let mut roots = Vec::new();
    for method in ["hill", "fredholm"] {
        let out = run(&[
            "locate",
            "--problem",
            p.to_str().unwrap(),
            "--region=-2,1,-0.5,0.5",
            "--method",
            method,
            "--J",
            "16",
            "--format",
            "csv",
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        let text = String::from_utf8(out.stdout).unwrap();
        let re: Vec<f64> = text
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
            .collect();
        roots.push(re);
    }
    assert_eq!(roots[0].len(), 3);
    assert_eq!(roots[0].len(), roots[1].len());
    for (a, b) in roots[0].iter().zip(&roots[1]) {
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }
}
