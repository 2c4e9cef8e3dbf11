//! Exit codes and outputs of the `vlos` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn vlos(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vlos"))
        .env("VLOS_SCENARIO_DIR", scenarios())
        .args(args)
        .output()
        .unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn los_closed_form() {
    let out = vlos(&["los", "--scenario", "standard"]);
    assert!(out.status.success());
    let v = json(&out)["value"].as_f64().unwrap();
    assert!((v - (-0.1f64).exp()).abs() < 1e-15);
}

#[test]
fn joint_accepts_negative_coordinates() {
    let out = vlos(&["joint", "--scenario", "fig5", "--tx=-10,0"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out)["value"].as_f64().unwrap();
    assert!((v - 0.841194020604181).abs() < 1e-12);
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(vlos(&["coverage", "--bogus"]).status.code(), Some(1));
    assert_eq!(vlos(&["los", "--method", "quadrature"]).status.code(), Some(1));
    assert_eq!(vlos(&["sweep", "--recipe", "nope"]).status.code(), Some(1));
    let out = vlos(&["los", "--scenario", "missing-scenario"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("scenario"));
}

#[test]
fn help_exits_0() {
    assert!(vlos(&["--help"]).status.success());
}

#[test]
fn bad_config_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "lambda_t_per_km = 4\nlambda_b_per_km = 10\nmean_half_length_m = 2.5\nd1_m = 10\nd2_m = 10\nd_star = 1500\n").unwrap();
    let out = vlos(&["los", "--scenario", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`d_star`"));
}

#[test]
fn budget_exceeded_exits_3() {
    let out = vlos(&["coverage", "--scenario", "fig8", "--k", "1", "--method", "quadrature", "--trials", "100"]);
    assert_eq!(out.status.code(), Some(0));
    let out = vlos(&[
        "coverage", "--scenario", "fig8", "--k", "1", "--method", "quadrature", "--analytic-cap", "10",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn failed_validation_exits_2() {
    // light blockage with few transmitters: one LOS transmitter is full but
    // not 2-LOS coverage, so the unconditional ordering row fails
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("light.toml");
    std::fs::write(&path, "lambda_t_per_km = 4\nlambda_b_per_km = 6\nmean_half_length_m = 0.5\nd1_m = 10\nd2_m = 10\nd_star_m = 500\n").unwrap();
    let out = vlos(&["validate", "--scenario", path.to_str().unwrap(), "--trials", "5000"]);
    assert_eq!(out.status.code(), Some(2));
    let report = json(&out);
    let failed: Vec<&str> = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["passed"] == false)
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert_eq!(failed, ["ordering_full_le_k2"]);

    let out = vlos(&["validate", "--scenario", "fig8", "--trials", "5000"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn coverage_dump_and_degenerate_window() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("terms.csv");
    let out = vlos(&["coverage", "--scenario", "klos", "--method", "quadrature", "--dump", dump.to_str().unwrap()]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&dump).unwrap();
    assert!(text.starts_with("n,contribution\n"));

    let path = dir.path().join("tiny.toml");
    std::fs::write(&path, "lambda_t_per_km = 4\nlambda_b_per_km = 6\nmean_half_length_m = 2\nd1_m = 10\nd2_m = 10\nd_star_m = 15\n").unwrap();
    let out = vlos(&["coverage", "--scenario", path.to_str().unwrap(), "--include-empty"]);
    assert!(out.status.success());
    assert_eq!(json(&out)["estimate"]["value"], 1.0);
    assert!(String::from_utf8_lossy(&out.stderr).contains("no detectable region"));
}

#[test]
fn simulate_trial_dump() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("trials.csv");
    let out = vlos(&["simulate", "--scenario", "fig8", "--trials", "500", "--k", "2", "--dump", dump.to_str().unwrap()]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&dump).unwrap();
    assert_eq!(text.lines().count(), 501);
    assert!(text.starts_with("trial,n_tx,n_los,covered\n0,"));
    let v = json(&out);
    assert_eq!(v["n_trials"], 500);
}

#[test]
fn sweep_from_spec_file_writes_csv_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let spec = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../experiments/fig5.toml");
    let csv = dir.path().join("fig5.csv");
    let out = vlos(&["sweep", "--spec", spec.to_str().unwrap(), "--trials", "2000", "--out", csv.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("d_m,closed-form,simulate,simulate_stderr"));
    assert_eq!(lines.count(), 61);
    for line in text.lines().skip(1) {
        for v in line.split(',').skip(1) {
            let v: f64 = v.parse().unwrap();
            assert!((0.0..=1.0).contains(&v));
        }
    }
    let sidecar: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("fig5.json")).unwrap()).unwrap();
    assert_eq!(sidecar["spec"]["trials"], 2000);
    assert_eq!(sidecar["errata"].as_object().unwrap().len(), 5);
}

#[test]
fn sweep_method_mismatch_exits_1() {
    let out = vlos(&["sweep", "--recipe", "fig5", "--method", "quadrature", "--out", "-"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no `quadrature` evaluator"));
}
