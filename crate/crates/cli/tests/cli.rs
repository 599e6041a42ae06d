use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_mems-bifurcate"));
    cmd.args(args);
    if let Some(t) = threads {
        cmd.env("MEMS_BIFURCATE_THREADS", t);
    }
    cmd.output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("run.cfg");
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn trace_in_the_singular_regime() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[problem]\ndimension = 8\nalpha = 0\n[mesh]\nM = 1024\n[continuation]\namplitude_max = 0.999\n",
    );
    let out = dir.path().join("out");
    let o = run(&["trace", "--config", &cfg, "--out", out.to_str().unwrap()], Some("2"));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("branch.csv")).unwrap();
    let last = csv.lines().last().unwrap();
    let lambda: f64 = last.split(',').nth(2).unwrap().parse().unwrap();
    assert!((lambda / (40.0 / 9.0) - 1.0).abs() < 0.02, "{lambda}");
    assert!(out.join("run_meta.json").exists());
}

#[test]
fn truncated_minimal_sweep_still_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "dimension = 2\nM = 256\nlambda_max = 1.5\nlambda_steps = 30\n");
    let out = dir.path().join("m");
    let o = run(&["minimal", "--config", &cfg, "--out", out.to_str().unwrap(), "--sequential"], None);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("Newton failed"));
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "dimension = 2\n");
    assert_eq!(run(&["bogus", "--config", &cfg], None).status.code(), Some(1));
    assert_eq!(run(&["trace"], None).status.code(), Some(1));
    let bad = write_config(dir.path(), "dimension = 0\n");
    assert_eq!(run(&["extremal", "--config", &bad], None).status.code(), Some(1));
    assert_eq!(run(&["extremal", "--config", "/nonexistent/run.cfg"], None).status.code(), Some(1));
    assert_eq!(run(&["--help"], None).status.code(), Some(0));
}

#[test]
fn numerical_failure_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    // far above the pull-in value: no minimal solution to evaluate
    let cfg = write_config(dir.path(), "dimension = 2\nM = 128\n[pohozaev]\nlambda = 3.0\n");
    let o = run(&["pohozaev", "--config", &cfg, "--out", dir.path().join("p").to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}
