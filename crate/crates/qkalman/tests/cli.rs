mod common;

use common::non_orthogonal_counterexample;
use qkalman::cli_io::corpus::entry;
use qkalman::matrix_core::CMat;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_qkalman"));
    c.env_remove("QKALMAN_TOL_ZERO");
    c
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn corpus_spec(dir: &Path, name: &str) -> PathBuf {
    write(dir, &format!("{name}.json"), entry(name).unwrap().spec)
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

fn cjson(x: &CMat) -> Value {
    Value::Array(
        (0..x.nrows())
            .map(|i| (0..x.ncols()).map(|j| json!([x[(i, j)].re, x[(i, j)].im])).collect())
            .collect(),
    )
}

#[test]
fn decompose_succeeds_with_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let spec = corpus_spec(dir.path(), "example2_complex");
    let o = bin().arg("decompose").arg(&spec).output().unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    assert_eq!(v["passed"], json!(true));
    assert_eq!(v["dims"]["n3"], json!(1));

    let t = bin().args(["decompose", "--format", "text"]).arg(&spec).output().unwrap();
    assert_eq!(code(&t), 0);
    assert!(String::from_utf8_lossy(&t.stdout).contains("status: PASS"));
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let spec = corpus_spec(dir.path(), "example1_passive");
    let out = dir.path().join("report.json");
    let o = bin().arg("decompose").arg(&spec).arg("--out").arg(&out).output().unwrap();
    assert_eq!(code(&o), 0);
    assert!(o.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["dims"]["n2"], json!(1));
}

#[test]
fn validation_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad_json = write(dir.path(), "a.json", "{ not json");
    let bad_shape = write(
        dir.path(),
        "b.json",
        r#"{"representation":"real","n":1,"m":1,"H":[[1,0],[0,1]],"C":[[1,0]]}"#,
    );
    for p in [&bad_json, &bad_shape] {
        let o = bin().arg("decompose").arg(p).output().unwrap();
        assert_eq!(code(&o), 1, "{}", p.display());
        assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
    }
    let o = bin()
        .env("QKALMAN_TOL_ZERO", "tiny")
        .arg("decompose")
        .arg(corpus_spec(dir.path(), "example1_passive"))
        .output()
        .unwrap();
    assert_eq!(code(&o), 1);
}

#[test]
fn structural_failure_exits_two() {
    let sys = non_orthogonal_counterexample();
    let spec = json!({
        "representation": "complex",
        "n": sys.n(),
        "m": sys.m(),
        "Omega_minus": cjson(sys.omega_minus()),
        "Omega_plus": cjson(sys.omega_plus()),
        "Cminus": cjson(sys.c_minus()),
        "Cplus": cjson(sys.c_plus()),
    });
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "c.json", &spec.to_string());
    let o = bin().arg("decompose").arg(&p).output().unwrap();
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("direct sum"));
    // still physically realizable
    let c = bin().arg("check").arg(&p).output().unwrap();
    assert_eq!(code(&c), 0);
}

#[test]
fn missing_file_exits_three() {
    let o = bin().args(["decompose", "/nonexistent/spec.json"]).output().unwrap();
    assert_eq!(code(&o), 3);
    let dir = tempfile::tempdir().unwrap();
    let spec = corpus_spec(dir.path(), "example1_passive");
    let o = bin()
        .arg("decompose")
        .arg(&spec)
        .arg("--out")
        .arg(dir.path().join("missing/dir/report.json"))
        .output()
        .unwrap();
    assert_eq!(code(&o), 3);
}

#[test]
fn tolerance_precedence_env_spec_cli() {
    let dir = tempfile::tempdir().unwrap();
    let plain = corpus_spec(dir.path(), "example1_passive");
    let mut with_tol: Value = serde_json::from_str(entry("example1_passive").unwrap().spec).unwrap();
    with_tol["tolerances"] = json!({"zero_tol": 2e-9});
    let tolled = write(dir.path(), "t.json", &with_tol.to_string());
    let zero = |o: &Output| stdout_json(o)["tolerances"]["zero_tol"].as_f64().unwrap();

    let o = bin().arg("decompose").arg(&plain).output().unwrap();
    assert_eq!(zero(&o), 1e-9);
    let o = bin().env("QKALMAN_TOL_ZERO", "5e-9").arg("decompose").arg(&plain).output().unwrap();
    assert_eq!(zero(&o), 5e-9);
    let o = bin().env("QKALMAN_TOL_ZERO", "5e-9").arg("decompose").arg(&tolled).output().unwrap();
    assert_eq!(zero(&o), 2e-9);
    let o = bin()
        .env("QKALMAN_TOL_ZERO", "5e-9")
        .arg("decompose")
        .arg(&tolled)
        .args(["--tol-zero", "3e-9"])
        .output()
        .unwrap();
    assert_eq!(zero(&o), 3e-9);
}

#[test]
fn corpus_run_passes_and_detects_drift() {
    let o = bin().args(["corpus", "run"]).output().unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let text = String::from_utf8_lossy(&o.stdout);
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS ")).count(), 8);

    let dir = tempfile::tempdir().unwrap();
    corpus_spec(dir.path(), "case1_red_detuned");
    let b = bin().args(["corpus", "bless", "--dir"]).arg(dir.path()).output().unwrap();
    assert_eq!(code(&b), 0);
    let o = bin().args(["corpus", "run", "--dir"]).arg(dir.path()).output().unwrap();
    assert_eq!(code(&o), 0);

    let golden = dir.path().join("golden/case1_red_detuned.json");
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(&golden).unwrap()).unwrap();
    v["dims"]["n2"] = json!(7);
    std::fs::write(&golden, v.to_string()).unwrap();
    let o = bin().args(["corpus", "run", "--dir"]).arg(dir.path()).output().unwrap();
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL case1_red_detuned"));
}
