use std::path::{Path, PathBuf};
use std::process::Command;

use homog_harness::pipeline::{run_cell, simulate_epsilon};
use homog_harness::report::read_snapshot_binary;
use homog_harness::RunConfig;
use serde_json::Value;

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(format!("{name}.json"))
}

fn homog(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_homog")).args(args).output().expect("spawn homog");
    let text = String::from_utf8_lossy(&out.stdout).into_owned() + &String::from_utf8_lossy(&out.stderr);
    (out.status.code().unwrap_or(-1), text)
}

fn run(sub: &str, cfg: &Path, out: &Path, extra: &[&str]) -> (i32, String) {
    let mut args = vec![sub, "--config", cfg.to_str().unwrap(), "--out-dir", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    homog(&args)
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn every_shipped_config_validates() {
    for entry in std::fs::read_dir(config("x").parent().unwrap()).unwrap() {
        let path = entry.unwrap().path();
        let (code, text) = homog(&["validate", "--config", path.to_str().unwrap()]);
        assert_eq!(code, 0, "{}: {text}", path.display());
    }
}

#[test]
fn validation_failures_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let broken = tmp.path().join("broken.json");
    std::fs::write(&broken, "{\"kernel\": 3}").unwrap();
    assert_eq!(homog(&["validate", "--config", broken.to_str().unwrap()]).0, 2);

    let cfg = config("converge_alpha05");
    assert_eq!(run("cell", &cfg, tmp.path(), &["--alpha", "2.5"]).0, 2);
    assert_eq!(run("simulate", &cfg, tmp.path(), &["--epsilon", "0.3"]).0, 2);

    let mut bad: Value = serde_json::from_str(&std::fs::read_to_string(&cfg).unwrap()).unwrap();
    bad["mu"]["terms"][0]["coeff"] = Value::from(1.5);
    let coercive = tmp.path().join("coercive.json");
    std::fs::write(&coercive, bad.to_string()).unwrap();
    assert_eq!(homog(&["validate", "--config", coercive.to_str().unwrap()]).0, 2);
}

#[test]
fn unreadable_inputs() {
    assert_eq!(homog(&["cell", "--config", "/nonexistent/config.json"]).0, 2);
    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    assert_eq!(run("cell", &config("homogeneous"), &blocker.join("out"), &[]).0, 3);
}

#[test]
fn cell_report_is_deterministic_and_exact() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config("time_only");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(run("cell", &cfg, &a, &[]).0, 0);
    assert_eq!(run("cell", &cfg, &b, &[]).0, 0);
    let (mut ra, mut rb) = (report(&a), report(&b));
    ra.as_object_mut().unwrap().remove("timestamp");
    rb.as_object_mut().unwrap().remove("timestamp");
    assert_eq!(ra, rb);
    for file in ["forcing.csv", "drift.csv", "theta.csv"] {
        assert_eq!(std::fs::read(a.join(file)).unwrap(), std::fs::read(b.join(file)).unwrap());
    }

    let stage = run_cell(&RunConfig::load(&cfg).unwrap()).unwrap();
    let theta: f64 = serde_json::from_value(ra["effective"]["theta"][0].clone()).unwrap();
    assert_eq!(theta.to_bits(), stage.effective.theta[0].to_bits());
    let b0: f64 = serde_json::from_value(ra["drift"]["b"][0][0].clone()).unwrap();
    assert_eq!(b0.to_bits(), stage.drift.means[0][0].to_bits());
    let rows = std::fs::read_to_string(a.join("theta.csv")).unwrap().lines().count();
    assert_eq!(rows, 1 + stage.set.samples.len());
}

#[test]
fn converge_writes_a_sorted_table() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, text) = run("converge", &config("converge_alpha05"), tmp.path(), &["--epsilon", "0.03125,0.125,0.0625"]);
    assert_eq!(code, 0, "{text}");
    let csv = std::fs::read_to_string(tmp.path().join("convergence.csv")).unwrap();
    let eps: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(eps, vec![0.125, 0.0625, 0.03125]);
    let rep = report(tmp.path());
    assert_eq!(rep["convergence"].as_array().unwrap().len(), 3);
    assert!(rep.get("runtime_s").is_none() && !rep.to_string().contains("runtime"));
}

#[test]
fn oracle_and_residual_verdicts() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, text) = run("oracle", &config("arrival_modulated"), tmp.path(), &[]);
    assert_eq!(code, 0, "{text}");
    let dev: f64 = serde_json::from_value(report(tmp.path())["oracle_deviation"]["chi1"].clone()).unwrap();
    assert!(dev <= 1e-8);
    let (code, text) = run("residual", &config("converge_alpha05"), tmp.path(), &[]);
    assert_eq!(code, 0, "{text}");
    let (code, _) = run("residual", &config("converge_alpha15"), tmp.path(), &[]);
    assert_eq!(code, 4);
}

#[test]
fn snapshots_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = config("converge_alpha05");
    assert_eq!(run("simulate", &cfg_path, tmp.path(), &["--epsilon", "0.125"]).0, 0);
    let cfg = RunConfig::load(&cfg_path).unwrap();
    let state = simulate_epsilon(&cfg, &run_cell(&cfg).unwrap(), 0.125).unwrap();
    for (k, snap) in state.checkpoints.iter().enumerate() {
        let back = read_snapshot_binary(tmp.path(), &format!("u_eps8_t{k}")).unwrap();
        assert!(back.iter().zip(&snap.values).all(|(a, b)| a.to_bits() == b.to_bits()));
    }
    let meta: Value = serde_json::from_str(&std::fs::read_to_string(tmp.path().join("u_eps8_t0.json")).unwrap()).unwrap();
    assert_eq!(meta["points"], Value::from(state.grid.len()));
}
