use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bundled() -> Value {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/examples/paper_sec7.json");
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Bundled scenario with a coarse boundary sweep so debug builds stay fast.
fn quick() -> Value {
    let mut doc = bundled();
    doc["mode"]["boundary_samples"] = 90.into();
    doc["mode"]["random_disturbances"] = 2.into();
    doc
}

fn write_config(dir: &Path, doc: &Value) -> PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_string_pretty(doc).unwrap()).unwrap();
    path
}

fn meshtube(config: &Path, out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_meshtube"))
        .arg("--config")
        .arg(config)
        .arg("--out-dir")
        .arg(out)
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn design_writes_gains_and_certificates() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &quick());
    let out = meshtube(&cfg, dir.path(), &["design"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let gains: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("gains.json")).unwrap()).unwrap();
    let k = gains["k"].as_array().unwrap();
    assert_eq!(k.len(), 6);
    assert!(k.iter().all(|k| k.as_f64().unwrap() >= 13.74));
    assert!(dir.path().join("design.json").exists());
}

#[test]
fn oversized_error_bound_fails_design() {
    let dir = tempfile::tempdir().unwrap();
    let mut doc = quick();
    doc["gains"]["auto"]["e_bar"] = 30.0.into();
    let cfg = write_config(dir.path(), &doc);
    let out = meshtube(&cfg, dir.path(), &["design"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stdout(&out).contains("set_inclusion"));
    assert!(!dir.path().join("gains.json").exists());
}

#[test]
fn unloaded_network_designs() {
    let dir = tempfile::tempdir().unwrap();
    let mut doc = quick();
    for key in ["load_p", "load_q", "dp_max", "dq_max"] {
        doc["network"][key] = 0.0.into();
    }
    let cfg = write_config(dir.path(), &doc);
    assert_eq!(meshtube(&cfg, dir.path(), &["design"]).status.code(), Some(0));
}

#[test]
fn certify_designed_gains_then_halved() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &quick());
    assert_eq!(meshtube(&cfg, dir.path(), &["design"]).status.code(), Some(0));
    let gains_path = dir.path().join("gains.json");

    let ok = meshtube(&cfg, dir.path(), &["--gains", gains_path.to_str().unwrap(), "certify"]);
    assert_eq!(ok.status.code(), Some(0), "{}", stdout(&ok));

    let mut gains: Value = serde_json::from_str(&std::fs::read_to_string(&gains_path).unwrap()).unwrap();
    for k in gains["k"].as_array_mut().unwrap() {
        *k = (k.as_f64().unwrap() * 0.01).into();
    }
    let weak = dir.path().join("weak.json");
    std::fs::write(&weak, gains.to_string()).unwrap();
    let bad = meshtube(&cfg, dir.path(), &["--gains", weak.to_str().unwrap(), "certify", "--json"]);
    assert_eq!(bad.status.code(), Some(2));
    let bundle: Value = serde_json::from_str(&stdout(&bad)).unwrap();
    let failing: Vec<&Value> = bundle["certificates"].as_array().unwrap().iter().filter(|c| c["pass"] == false && c["name"] != "later_references").collect();
    assert_eq!(failing.len(), 1);
    assert_eq!(failing[0]["name"], "boundary_invariance");
    assert!(failing[0]["witness"]["node"].is_u64());
}

#[test]
fn simulate_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let mut doc = quick();
    doc["disturbance"]["kind"] = "piecewise-random".into();
    let cfg = write_config(dir.path(), &doc);
    let run = |sub: &str, seed: &str| {
        let out = dir.path().join(sub);
        let o = meshtube(&cfg, &out, &["--seed", seed, "--t-end", "0.01", "simulate"]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read(out.join("trajectory.csv")).unwrap()
    };
    let a = run("a", "1");
    let b = run("b", "1");
    let c = run("c", "2");
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert!(dir.path().join("a/report.json").exists());
    assert!(dir.path().join("a/plots/voltage_v6.dat").exists());
}

#[test]
fn zero_horizon_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &quick());
    let o = meshtube(&cfg, dir.path(), &["--t-end", "0", "simulate"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert_eq!(csv, "t,node,v_d,v_q,v_rms,z_d,z_q,sigma_d,sigma_q,e_norm,b,dP,dQ\n");
}

#[test]
fn config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let mut doc = quick();
    doc["network"]["colour"] = "red".into();
    let cfg = write_config(dir.path(), &doc);
    let o = meshtube(&cfg, dir.path(), &["design"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("network"));

    let missing = dir.path().join("nope.json");
    assert_eq!(meshtube(&missing, dir.path(), &["design"]).status.code(), Some(1));
}

#[test]
fn bad_time_step_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &quick());
    let o = meshtube(&cfg, dir.path(), &["--dt", "0", "simulate"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn divergence_exits_three_with_dump() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &quick());
    let o = meshtube(&cfg, dir.path(), &["--dt", "0.01", "--t-end", "1", "simulate"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    let dump: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("divergence.json")).unwrap()).unwrap();
    assert!(dump["last_state"].is_array());
}

#[test]
fn compare_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &quick());
    let o = meshtube(&cfg, dir.path(), &["--t-end", "0.005", "compare"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let cmp: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("comparison.json")).unwrap()).unwrap();
    assert_eq!(cmp["steady_state_discrepancy"].as_array().unwrap().len(), 6);
}
