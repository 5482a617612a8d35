use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mipm::io::read_vector;

fn mipm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mipm")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn field(o: &Output, key: &str) -> f64 {
    stdout(o)
        .lines()
        .find_map(|l| l.strip_prefix(key).map(|v| v.trim().parse().unwrap()))
        .unwrap_or_else(|| panic!("no {key} in output:\n{}", stdout(o)))
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn identity_scales_to_ones() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(
        dir.path(),
        "i.mtx",
        "%%MatrixMarket matrix coordinate real symmetric\n3 3 3\n1 1 1\n2 2 1\n3 3 1\n",
    );
    let x = dir.path().join("x.txt");
    let o = mipm(&["scale", s(&a), "--out", s(&x)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(field(&o, "residual"), 0.0);
    for v in read_vector(&x).unwrap() {
        assert!((v - 1.0).abs() < 1e-12);
    }
}

#[test]
fn malformed_header_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "bad.mtx", "%%MatrixMarket matrix array real general\n1 1\n1\n");
    let o = mipm(&["scale", s(&a)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
}

#[test]
fn positive_off_diagonal_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(
        dir.path(),
        "p.mtx",
        "%%MatrixMarket matrix coordinate real symmetric\n2 2 3\n1 1 2\n2 1 0.5\n2 2 2\n",
    );
    assert_eq!(mipm(&["scale", s(&a)]).status.code(), Some(2));
}

#[test]
fn scalar_qp() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.mtx", "%%MatrixMarket matrix coordinate real symmetric\n1 1 1\n1 1 1\n");
    let b = write(dir.path(), "b.txt", "2\n");
    let x = dir.path().join("x.txt");
    let o = mipm(&["qp", s(&a), s(&b), "--eps", "1e-8", "--out", s(&x)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!((field(&o, "objective") + 2.0).abs() <= 1e-8);
    assert!(field(&o, "gap_bound") <= 1e-8);
    assert!((read_vector(&x).unwrap()[0] - 2.0).abs() < 1e-4);
}

#[test]
fn qp_length_mismatch_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.mtx", "%%MatrixMarket matrix coordinate real symmetric\n1 1 1\n1 1 1\n");
    let b = write(dir.path(), "b.txt", "1\n2\n");
    assert_eq!(mipm(&["qp", s(&a), s(&b)]).status.code(), Some(2));
}

#[test]
fn trace_and_summary_files() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("g.mtx");
    let o = mipm(&["gen", "--family", "grid-laplacian", "--n", "16", "--out", s(&a)]);
    assert!(o.status.success());
    assert_eq!(field(&o, "n"), 16.0);
    let trace = dir.path().join("t.csv");
    let summary = dir.path().join("s.json");
    let o = mipm(&["scale", s(&a), "--trace", s(&trace), "--summary", s(&summary)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = mipm::diagnostics::read_trace(&trace).unwrap();
    assert_eq!(rows.len() as f64, field(&o, "iterations"));
    assert!(dir.path().join("t.csv.config.json").exists());
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&summary).unwrap()).unwrap();
    assert_eq!(json["n"], 16);
    assert!(json["residual"].as_f64().unwrap() <= 1e-6);
    assert!(json["diagnostics"].is_object());
}

#[test]
fn verify_small_and_fault_injection() {
    let o = mipm(&["verify", "--trials", "20", "--max-n", "8"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert_eq!(field(&o, "violations"), 0.0);

    let o = mipm(&["verify", "--trials", "20", "--max-n", "8", "--inject-fault"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(field(&o, "violations") > 0.0);
}

#[test]
fn verify_zero_trials_exits_2() {
    assert_eq!(mipm(&["verify", "--trials", "0"]).status.code(), Some(2));
}

#[test]
fn bench_needs_several_sizes() {
    let o = mipm(&["bench", "--n", "64"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bench_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("b.csv");
    let o = mipm(&[
        "bench", "--family", "diagonal", "--n", "4,8,16,32", "--eps", "1e-4", "--out", s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(mipm::bench::BENCH_HEADER));
    assert_eq!(lines.count(), 4);
    assert!(field(&o, "fitted_exponent").is_finite());
}

#[test]
fn unknown_flag_exits_2() {
    assert_eq!(mipm(&["scale", "--bogus"]).status.code(), Some(2));
}
