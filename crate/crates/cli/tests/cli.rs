use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("run.toml");
    let polygon = configs().join("square.json");
    let text = format!("polygon = {:?}\n{body}", polygon.to_str().unwrap());
    std::fs::write(&path, text).unwrap();
    path
}

fn calabi(cmd: &str, config: &Path, out: &Path, extra: &[&str]) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_calabi"))
        .arg(cmd)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .status()
        .unwrap()
        .code()
        .unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn diagnose_square_reports_oracles() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[potential]\npreset = \"guillemin\"\n");
    let out = tmp.path().join("out");
    assert_eq!(calabi("diagnose", &cfg, &out, &[]), 0);
    let r = read_json(&out.join("diagnose.json"));
    let theta: Vec<f64> = serde_json::from_value(r["theta"].clone()).unwrap();
    assert!((theta[0] - 8.0).abs() < 1e-10 && theta[1].abs() < 1e-10 && theta[2].abs() < 1e-10);
    assert!((r["rm_at_centroid"].as_f64().unwrap() - 32f64.sqrt()).abs() < 1e-6);
    let edge_ray = std::f64::consts::PI / 2f64.sqrt();
    let rays = r["rays"].as_array().unwrap();
    assert!(rays
        .iter()
        .filter_map(|ray| ray["length"].as_f64())
        .any(|l| (l - edge_ray).abs() < 1e-4));
    assert_eq!(read_json(&out.join("status.json"))["exit_code"], 0);
}

#[test]
fn same_seed_gives_identical_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[potential]\npreset = \"perturbed:0.05\"\n");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(calabi("diagnose", &cfg, &a, &["--seed", "11"]), 0);
    assert_eq!(calabi("diagnose", &cfg, &b, &["--seed", "11"]), 0);
    let read = |d: &Path| std::fs::read(d.join("diagnose.json")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn invalid_polygon_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let poly = tmp.path().join("bad.json");
    std::fs::write(&poly, r#"{ "vertices": [[0, 0], [2, 0], [0, 1]] }"#).unwrap();
    let cfg = tmp.path().join("bad.toml");
    std::fs::write(&cfg, "polygon = \"bad.json\"\n").unwrap();
    let out = tmp.path().join("out");
    for cmd in ["validate", "diagnose"] {
        assert_eq!(calabi(cmd, &cfg, &out, &[]), 1, "{cmd}");
        assert_eq!(read_json(&out.join("status.json"))["exit_code"], 1);
    }
    assert_eq!(read_json(&out.join("validation.json"))["valid"], false);
}

#[test]
fn malformed_config_reports_the_line() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[flow]\ntol = \"small\"\n");
    let out = tmp.path().join("out");
    assert_eq!(calabi("flow", &cfg, &out, &[]), 1);
    let status = read_json(&out.join("status.json"));
    assert_eq!(status["condition"], "bad_config");
    assert!(status["message"].as_str().unwrap().contains("line 3"));
}

#[test]
fn zero_time_limit_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "[potential]\npreset = \"perturbed:0.05\"\n[flow]\nt_max = 0.0\n",
    );
    let out = tmp.path().join("out");
    assert_eq!(calabi("flow", &cfg, &out, &[]), 2);
    let history = std::fs::read_to_string(out.join("history.csv")).unwrap();
    assert_eq!(history.lines().count(), 2);
    assert_eq!(read_json(&out.join("status.json"))["condition"], "time_limit");
}

#[test]
fn curvature_bound_breach_exits_four() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[flow]\ncurvature_bound = 0.1\n");
    let out = tmp.path().join("out");
    assert_eq!(calabi("flow", &cfg, &out, &[]), 4);
    let history = std::fs::read_to_string(out.join("history.csv")).unwrap();
    assert_eq!(history.lines().count(), 2);
}

#[test]
fn perturbed_square_flow_converges() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "[potential]\npreset = \"perturbed:0.05\"\n[flow]\ntol = 1e-5\n",
    );
    let out = tmp.path().join("out");
    assert_eq!(calabi("flow", &cfg, &out, &[]), 0);
    let report = read_json(&out.join("energy_report.json"));
    assert!(report["sup_curvature_deviation"].as_f64().unwrap() < 1e-2);
    for f in ["history.csv", "final_potential.json", "plot_history.py", "status.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn small_commands_write_their_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[stability]\ndirections = 72\noffsets = 20\n");
    let out = tmp.path().join("out");
    for (cmd, file) in [
        ("theta", "theta.json"),
        ("mcond", "mcond.json"),
        ("diameter", "diameter.json"),
        ("stability", "stability_report.json"),
    ] {
        assert_eq!(calabi(cmd, &cfg, &out, &[]), 0, "{cmd}");
        assert!(out.join(file).exists(), "{file}");
    }
    let m = read_json(&out.join("mcond.json"));
    assert!(m["m_hat"].as_f64().unwrap() >= 2f64.ln() - 1e-9);
    let s = read_json(&out.join("stability_report.json"));
    assert!(s["lambda_hat"].as_f64().unwrap() > 0.0);
}
