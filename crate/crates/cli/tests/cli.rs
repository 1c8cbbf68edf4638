use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn msqg(dir: &Path, config: &str, args: &[&str]) -> Output {
    let path = dir.join("run.toml");
    std::fs::write(&path, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_msqg"))
        .args(args)
        .arg("--config")
        .arg(&path)
        .arg("--out")
        .arg(dir.join("out"))
        .arg("--threads")
        .arg("1")
        .output()
        .unwrap()
}

fn csv(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path).unwrap().lines().map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn meta(dir: &Path, command: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("out").join(format!("{command}.meta.json"))).unwrap()).unwrap()
}

fn closed_form_alpha(k: (f64, f64), h: (f64, f64), delta: f64) -> f64 {
    let q = (k.0 - h.0, k.1 - h.1);
    let norm = |v: (f64, f64)| v.0.hypot(v.1);
    let cross = -h.1 * k.0 + h.0 * k.1;
    -0.5 * (cross / norm(k)) * (norm(q).powf(-delta) * norm(h) - norm(h).powf(-delta) * norm(q))
}

#[test]
fn coefficient_window_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let out = msqg(dir.path(), "[model]\ndelta = 0.5\n[coefficients]\nk_modes = [[1, 0]]\nh_extent = 2\n", &["coefficients"]);
    assert!(out.status.success());
    let rows = csv(&dir.path().join("out/coefficients.csv"));
    assert_eq!(rows[0], ["k1", "k2", "h1", "h2", "alpha", "alpha_sym"]);
    // h = 0 is not a mode of the box
    assert_eq!(rows.len(), 1 + 24);
    for r in &rows[1..] {
        let h: (f64, f64) = (r[2].parse().unwrap(), r[3].parse().unwrap());
        let a: f64 = r[4].parse().unwrap();
        assert_eq!(r[4], r[5]);
        // h = k is an excluded term
        let expected = if h == (1.0, 0.0) { 0.0 } else { closed_form_alpha((1.0, 0.0), h, 0.5) };
        assert!((a - expected).abs() <= 1e-14 * expected.abs().max(1.0), "{h:?}: {a} vs {expected}");
    }
}

#[test]
fn empty_window_is_header_only_and_bad_window_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    assert!(msqg(dir.path(), "[coefficients]\nk_modes = []\n", &["coefficients"]).status.success());
    assert_eq!(csv(&dir.path().join("out/coefficients.csv")).len(), 1);
    assert_eq!(msqg(dir.path(), "[coefficients]\nk_modes = [[0, 0]]\n", &["coefficients"]).status.code(), Some(4));
    assert_eq!(msqg(dir.path(), "[coefficients]\nh_extent = 100000\n", &["coefficients"]).status.code(), Some(4));
}

#[test]
fn sample_counts_modes_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let config = "seed = 7\n[model]\ncutoff = 1\n[sample]\nmembers = 2000\nsnapshots = 2\n";
    assert!(msqg(dir.path(), config, &["sample"]).status.success());
    let rows = csv(&dir.path().join("out/moments.csv"));
    assert_eq!(rows.len(), 1 + 8);
    let first = std::fs::read(dir.path().join("out/samples/sample_00001.msqg")).unwrap();
    let meta_a = meta(dir.path(), "sample");
    assert!(msqg(dir.path(), config, &["sample"]).status.success());
    assert_eq!(std::fs::read(dir.path().join("out/samples/sample_00001.msqg")).unwrap(), first);
    assert_eq!(meta(dir.path(), "sample"), meta_a);
    assert!(meta_a["summary"]["pass"].as_bool().unwrap());
    assert_eq!(meta_a["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn seed_flag_overrides_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = "seed = 7\n[model]\ncutoff = 1\n[sample]\nmembers = 10\n";
    assert!(msqg(dir.path(), config, &["sample", "--seed", "8"]).status.success());
    let m = meta(dir.path(), "sample");
    assert_eq!(m["config"]["seed"], 8);
}

#[test]
fn zero_initial_data_stays_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = msqg(dir.path(), "[evolve]\ninitial = \"zero\"\nt_final = 0.1\n[integrator]\ndt = 0.05\n", &["evolve"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let a = std::fs::read(dir.path().join("out/trajectory/state_00000.msqg")).unwrap();
    let b = std::fs::read(dir.path().join("out/trajectory/state_00002.msqg")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn evolve_reports_finite_drift() {
    let dir = tempfile::tempdir().unwrap();
    assert!(msqg(dir.path(), "[evolve]\nt_final = 0.2\n", &["evolve"]).status.success());
    let drift: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/drift.json")).unwrap()).unwrap();
    for key in ["initial_value", "max_relative_drift", "final_relative_drift", "max_hermitian_defect", "log_density_drift"] {
        assert!(drift["drift"][key].as_f64().unwrap().is_finite(), "{key}");
    }
    assert!(drift["drift"]["max_relative_drift"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn numerical_failure_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = msqg(dir.path(), "[integrator]\ndt = 0.5\nmax_fixed_point_iters = 1\n", &["evolve"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn expectation_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    assert!(msqg(dir.path(), "[model]\ndelta = 0.0\n[expectation]\nradius = 512\n", &["expectation"]).status.success());
    let rows = csv(&dir.path().join("out/sums.csv"));
    assert_eq!(rows.last().unwrap()[7], "log-divergent");
    assert!(!dir.path().join("out/expectation.csv").exists());

    let out = msqg(dir.path(), "[model]\ndelta = 1.0\n[expectation]\nradius = 512\nmembers = 2000\nsobolev = [-2.5, -3.0]\n", &["expectation"]);
    assert!(out.status.success());
    assert_eq!(csv(&dir.path().join("out/sums.csv")).last().unwrap()[7], "converged");
    let rows = csv(&dir.path().join("out/expectation.csv"));
    assert_eq!(rows[0], ["N", "s", "delta", "analytic", "mc", "se"]);
    for r in &rows[1..] {
        let (a, m, se): (f64, f64, f64) = (r[3].parse().unwrap(), r[4].parse().unwrap(), r[5].parse().unwrap());
        assert!((a - m).abs() <= 3.0 * se);
    }
}

#[test]
fn invariance_zero_time_passes_and_bug_switch_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = msqg(dir.path(), "[invariance]\ntimes = [0.0]\nmembers = 200\n", &["invariance"]);
    assert!(out.status.success());
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/invariance.json")).unwrap()).unwrap();
    assert_eq!(doc["report"]["max_abs_z"], 0.0);
    assert_eq!(doc["report"]["observables"].as_array().unwrap().len(), 20);
    assert!(!doc["report"]["decisions"].as_array().unwrap().is_empty());
    assert_eq!(doc["config_sha256"], meta(dir.path(), "invariance")["config_sha256"]);

    let out = msqg(dir.path(), "[model]\ncutoff = 3\n[invariance]\ntimes = [1.0]\nmembers = 400\nbug_switch = true\n", &["invariance"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_configuration_exits_with_four() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(msqg(dir.path(), "sede = 1\n", &["sample"]).status.code(), Some(4));
    assert_eq!(msqg(dir.path(), "[model]\ndelta = 2.0\n", &["sample"]).status.code(), Some(4));
    assert_eq!(msqg(dir.path(), "[model]\ndelta = 0.0\n", &["evolve"]).status.code(), Some(4));
    assert_eq!(msqg(dir.path(), "[integrator]\ndt = -1.0\n", &["evolve"]).status.code(), Some(4));
}

#[test]
fn formulation_flag_and_config_echo() {
    let dir = tempfile::tempdir().unwrap();
    let out = msqg(dir.path(), "", &["coefficients", "--formulation", "streamline", "--print-config"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("formulation = \"streamline\""));
}
