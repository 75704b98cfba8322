//! The binary end to end: exit codes, output files and byte-for-byte reruns.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

fn integratorlab(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_integratorlab"));
    cmd.args(args).env_remove("INTEGRATORLAB_THREADS");
    if let Some(t) = threads {
        cmd.env("INTEGRATORLAB_THREADS", t);
    }
    cmd.output().expect("binary runs")
}

fn read_dir(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect()
}

#[test]
fn unknown_flag_exits_nonzero_with_usage() {
    let out = integratorlab(&["verify-all", "--frobnicate"], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn bad_thread_count_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = integratorlab(&["simulate", "--steps", "16", "--paths", "10", "--out", dir.path().to_str().unwrap()], Some("zero"));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("INTEGRATORLAB_THREADS"));
}

#[test]
fn hypothesis_violation_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let out = integratorlab(&["duality", "--op", "bridge", "--steps", "32", "--paths", "20", "--out", dir.path().to_str().unwrap()], None);
    assert_ne!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("hypothesis"));
}

#[test]
fn duality_writes_the_schema() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = integratorlab(
        &["duality", "--op", "fbm", "--alpha", "0.7", "--u", "0", "--t", "1", "--steps", "32", "--paths", "4000", "--seed", "42", "--out", d],
        None,
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    for name in ["duality_integrator.csv", "duality_min_norm.csv"] {
        let text = std::fs::read_to_string(dir.path().join(name)).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("op,u,t,h,lhs,lhs_se,rhs,rhs_se,pass"));
        let hs: Vec<&str> = lines.map(|l| l.split(',').nth(3).unwrap()).collect();
        assert_eq!(hs, ["one", "sign", "ramp"]);
    }
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "op = fbm\nalpha = 0.75\nsteps = 64\npaths = 3000\nseed = 5\n").unwrap();
    let out_dir = dir.path().join("out");
    let out = integratorlab(
        &["simulate", "--config", cfg.to_str().unwrap(), "--steps", "32", "--dump-paths", "1", "--out", out_dir.to_str().unwrap()],
        None,
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let op = std::fs::read_to_string(out_dir.join("operator.txt")).unwrap();
    assert!(op.contains("n_steps 32") && op.contains("alpha 7.5e-1"), "{op}");
    let path = std::fs::read_to_string(out_dir.join("paths/path_0.csv")).unwrap();
    assert_eq!(path.lines().count(), 34);
}

#[test]
fn verify_all_is_byte_identical_across_reruns_and_worker_counts() {
    let dirs: Vec<_> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    let mut outputs = Vec::new();
    for (dir, threads) in dirs.iter().zip([Some("1"), Some("3"), None]) {
        let out = integratorlab(
            &["verify-all", "--steps", "256", "--paths", "300", "--seed", "7", "--out", dir.path().to_str().unwrap()],
            threads,
        );
        assert!(out.status.code().is_some_and(|c| c <= 1), "{}", String::from_utf8_lossy(&out.stderr));
        outputs.push((out.stdout, read_dir(dir.path())));
    }
    assert!(outputs[0].1.contains_key("verify.csv"));
    assert_eq!(outputs[0].1.len(), 3);
    for other in &outputs[1..] {
        assert_eq!(outputs[0], *other);
    }
}

#[test]
fn bridge_duality_on_the_first_half() {
    let dir = tempfile::tempdir().unwrap();
    let out = integratorlab(
        &["duality", "--op", "bridge", "--t", "0.5", "--steps", "32", "--paths", "4000", "--seed", "3", "--out", dir.path().to_str().unwrap()],
        None,
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{stdout}{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout.contains("minimal-norm representation skipped"));
    let min_norm = std::fs::read_to_string(dir.path().join("duality_min_norm.csv")).unwrap();
    assert_eq!(min_norm.lines().count(), 1);
}
