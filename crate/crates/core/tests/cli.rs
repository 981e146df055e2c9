mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::config_path;
use serde_json::Value;

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_radshoot"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn cfg(name: &str) -> String {
    config_path(name).to_string_lossy().into_owned()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

#[test]
fn check_accepts_m1() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["--config", &cfg("m1.ini"), "check"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["tool"], "radshoot");
    assert_eq!(v["command"], "check");
    assert_eq!(v["result"]["hypotheses"]["case"], "A1");
    assert_eq!(v["config_sha256"].as_str().unwrap().len(), 64);
    assert!(dir.path().join("check.json").exists());
}

#[test]
fn check_rejects_cubic_with_hypothesis_exit() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["--config", &cfg("cubic.ini"), "check"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("f3"));
    assert_eq!(json(&o)["result"]["hypotheses"]["f3"]["verdict"], "fail");
}

#[test]
fn malformed_config_is_a_numeric_failure() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.ini");
    std::fs::write(&bad, "[problem]\nn = 3\n[nonlinearity]\nkind = hermite\ngamma_star = 2\n0 0\n").unwrap();
    let o = run(&["--config", bad.to_str().unwrap(), "check"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 6"));
}

#[test]
fn shoot_writes_csv_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["--config", &cfg("m1.ini"), "--format", "csv", "--svg", "shoot", "--alpha", "1.9"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["result"]["termination"]["reason"], "trapped_in_well");
    let csv = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("r,u,uprime,I,E"));
    assert!(lines.next().unwrap().starts_with("0.0000000000000000e0,1.8999999999999999e0"));
    let svg = std::fs::read_to_string(dir.path().join("trajectory.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("polyline"));
    assert!(dir.path().join("events.json").exists());
}

#[test]
fn shoot_is_byte_for_byte_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["--config", &cfg("m1.ini"), "shoot", "--alpha", "1.95"];
    let (oa, ob) = (run(&args, a.path()), run(&args, b.path()));
    assert_eq!(oa.stdout, ob.stdout);
    for f in ["classification.json", "events.json", "trajectory.json"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn linear_shot_follows_sine_over_r() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["--config", &cfg("linear.ini"), "shoot", "--alpha", "1"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let traj: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("trajectory.json")).unwrap()).unwrap();
    let samples = traj["result"].as_array().unwrap();
    assert!(samples.len() > 10);
    for s in samples {
        let r = s["r"].as_f64().unwrap();
        let u = s["u"].as_f64().unwrap();
        let exact = if r == 0.0 { 1.0 } else { r.sin() / r };
        assert!((u - exact).abs() < 1e-7, "r = {r}");
    }
}

#[test]
fn pairs_on_deep_well_finds_k0_pair() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["--config", &cfg("m3_deep_well.ini"), "--svg", "pairs", "--k", "0"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = &json(&o)["result"];
    assert_eq!(r["distinct"], true);
    for side in ["alpha_sharp", "alpha_star"] {
        assert_eq!(r[side]["certified"], true);
        assert_eq!(r[side]["sign_changes"], 0);
    }
    let sharp = r["alpha_sharp"]["witness"]["alpha"].as_f64().unwrap();
    let star = r["alpha_star"]["witness"]["alpha"].as_f64().unwrap();
    assert!(sharp < star && star < 2.0);
    assert!(dir.path().join("pairs.svg").exists());
}

#[test]
fn pairs_on_m2_reports_not_found() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["--config", &cfg("m2.ini"), "pairs", "--k", "0"], dir.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("65536"));
}

#[test]
fn theorems_on_m2_hold_for_k1() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["--config", &cfg("m2.ini"), "theorems", "--k", "1"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["result"]["nonexistence"]["theorem"], "NonexistenceA1");
    assert_eq!(v["result"]["nonexistence"]["holds"], true);
}

#[test]
fn theorems_use_f_infinity_for_i_bar() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["--config", &cfg("a2_tail.ini"), "theorems", "--k", "1", "--f-infinity", "3.5"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    assert_eq!(v["result"]["case"], "A2");
    assert_eq!(v["result"]["k0_condition"]["constants"]["I_bar"].as_f64(), Some(3.5));
}

#[test]
fn scan_labels_every_point() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["--config", &cfg("m1.ini"), "--svg", "--format", "csv", "scan", "--grid", "32"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    let points = v["result"]["points"].as_array().unwrap();
    assert_eq!(points.len(), 32);
    assert!(points.iter().all(|p| p["classification"].is_object()));
    let csv = std::fs::read_to_string(dir.path().join("scan.csv")).unwrap();
    assert_eq!(csv.lines().count(), 33);
}
