//! End-to-end runs of the `bgk` binary: exit codes, headers and reproducibility.

use std::path::{Path, PathBuf};
use std::process::Command;

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("bgk-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn bgk(args: &[&str], env_out: Option<&Path>) -> (i32, String) {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_bgk"));
    cmd.args(args).env_remove("BGK_OUTPUT_DIR");
    if let Some(d) = env_out {
        cmd.env("BGK_OUTPUT_DIR", d);
    }
    let out = cmd.output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

#[test]
fn period_table_is_monotone_and_byte_reproducible() {
    let a = scratch("table-a");
    let b = scratch("table-b");
    assert_eq!(bgk(&["period-table", "--out", a.to_str().unwrap()], None).0, 0);
    assert_eq!(bgk(&["period-table"], Some(&b)).0, 0);
    let ta = std::fs::read(a.join("period_table.csv")).unwrap();
    assert_eq!(ta, std::fs::read(b.join("period_table.csv")).unwrap());
    assert_eq!(std::fs::read(a.join("period_table.json")).unwrap(), std::fs::read(b.join("period_table.json")).unwrap());
    let text = String::from_utf8(ta).unwrap();
    assert!(text.lines().nth(1).unwrap().starts_with("# config_sha256="));
    assert!(text.lines().nth(2).unwrap().starts_with("# chart nodes_per_panel="));
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(a.join("period_table.json")).unwrap()).unwrap();
    assert_eq!(json["report"]["increasing_on_trapped"], true);
    assert_eq!(json["report"]["decreasing_on_exterior"], true);
}

#[test]
fn malformed_config_exits_with_one() {
    let d = scratch("bad");
    let cfg = d.join("bad.toml");
    std::fs::write(&cfg, "[equilibrium]\neps = 0.05\nprofile = { name = \"boltzmann\", beta = 1.0 }\npotential = { shape = \"sin2\", amplitude = 0.1 }\nbogus = 1\n").unwrap();
    let (code, err) = bgk(&["build-equilibrium", "--config", cfg.to_str().unwrap(), "--out", d.to_str().unwrap()], None);
    assert_eq!(code, 1);
    assert!(err.contains("line") && err.contains("bogus"), "{err}");
}

#[test]
fn failing_assumption_exits_with_two_and_writes_a_report() {
    let d = scratch("hump");
    let cfg = d.join("hump.toml");
    std::fs::write(&cfg, "[equilibrium]\neps = 0.05\nprofile = { name = \"boltzmann\", beta = 1.0 }\npotential = { shape = \"double_hump\", amplitude = 0.1 }\n").unwrap();
    let (code, _) = bgk(&["verify-assumptions", "--config", cfg.to_str().unwrap(), "--out", d.to_str().unwrap()], None);
    assert_eq!(code, 2);
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(d.join("assumptions.json")).unwrap()).unwrap();
    let checks = json["report"]["checks"].as_array().unwrap();
    assert!(checks.iter().any(|c| c["name"] == "phi1" && c["passed"] == false));
}

#[test]
fn scaling_flags_echo_derived_exponents() {
    let d = scratch("scaling");
    let (code, _) = bgk(&["scaling", "--a", "0", "--c", "1", "--eps", "0.05", "--out", d.to_str().unwrap()], None);
    assert_eq!(code, 0);
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(d.join("scaling.json")).unwrap()).unwrap();
    let r = &json["report"];
    assert_eq!((r["b"].as_f64(), r["d"].as_f64(), r["e"].as_f64()), (Some(0.0), Some(-2.0), Some(0.0)));
    assert!((r["lambda"].as_f64().unwrap() - 20.0).abs() < 1e-12);
    assert_eq!(bgk(&["scaling", "--a", "1", "--c", "1", "--lambda", "2", "--out", d.to_str().unwrap()], None).0, 1);
}
