use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn dwsrp(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dwsrp"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn error_line(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let last = text.lines().last().expect("stderr has an error line");
    serde_json::from_str(last).expect("error line is JSON")
}

fn day(dir: &Path) {
    let out = dwsrp(dir, &["generate", "--tasks", "12", "--crews", "2", "--intervals", "3", "--seed", "5", "--out", "day.json"]);
    assert!(out.status.success());
}

#[test]
fn help_and_version_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    for flag in ["--help", "--version"] {
        let out = dwsrp(dir.path(), &[flag]);
        assert!(out.status.success());
        assert!(!out.stdout.is_empty());
    }
}

#[test]
fn usage_errors_are_one_json_line() {
    let dir = tempfile::tempdir().unwrap();
    let out = dwsrp(dir.path(), &["generate", "--tasks", "5", "--crews", "1", "--intervals", "2", "--dynamism", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_line(&out)["error"], "usage");
    assert_eq!(String::from_utf8_lossy(&out.stderr).lines().count(), 1);

    let out = dwsrp(dir.path(), &["generate", "--tasks", "5", "--crews", "1", "--intervals", "9", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(2));

    day(dir.path());
    let out = dwsrp(dir.path(), &["simulate", "day.json", "--frozen", "later"]);
    assert_eq!(out.status.code(), Some(2));
    let out = dwsrp(dir.path(), &["simulate", "day.json", "--beta-time", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_inputs_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = dwsrp(dir.path(), &["solve", "missing.json"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error_line(&out)["error"], "io");

    day(dir.path());
    let text = fs::read_to_string(dir.path().join("day.json")).unwrap();
    fs::write(dir.path().join("bad.json"), text.replace("rectilinear", "euclidean")).unwrap();
    let out = dwsrp(dir.path(), &["solve", "bad.json", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error_line(&out)["error"], "input");
}

#[test]
fn missing_seed_is_drawn_and_reported() {
    let dir = tempfile::tempdir().unwrap();
    let out = dwsrp(dir.path(), &["generate", "--tasks", "6", "--crews", "2", "--intervals", "2", "--out", "a.json"]);
    assert!(out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    let seed: u64 = stderr.lines().find_map(|l| l.strip_prefix("seed=")).unwrap().parse().unwrap();
    let file: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("a.json")).unwrap()).unwrap();
    assert_eq!(file["meta"]["seed"], seed);

    let again = dwsrp(dir.path(), &["generate", "--tasks", "6", "--crews", "2", "--intervals", "2", "--seed", &seed.to_string(), "--out", "b.json"]);
    assert!(again.status.success());
    assert_eq!(fs::read(dir.path().join("a.json")).unwrap(), fs::read(dir.path().join("b.json")).unwrap());
}

#[test]
fn timing_is_opt_in() {
    let dir = tempfile::tempdir().unwrap();
    day(dir.path());
    let plain = dwsrp(dir.path(), &["solve", "day.json", "--seed", "1"]);
    let timed = dwsrp(dir.path(), &["--timing", "solve", "day.json", "--seed", "1"]);
    let plain: serde_json::Value = serde_json::from_slice(&plain.stdout).unwrap();
    let timed: serde_json::Value = serde_json::from_slice(&timed.stdout).unwrap();
    assert!(plain.get("cpu_s").is_none());
    assert!(timed["cpu_s"].as_f64().unwrap() >= 0.0);
    assert_eq!(plain["twtt"], timed["twtt"]);
}

#[test]
fn solve_reports_ch_and_alns() {
    let dir = tempfile::tempdir().unwrap();
    day(dir.path());
    let ch = dwsrp(dir.path(), &["solve", "day.json", "--solver", "ch", "--seed", "1"]);
    let alns = dwsrp(dir.path(), &["solve", "day.json", "--seed", "1", "--nu1", "100"]);
    let ch: serde_json::Value = serde_json::from_slice(&ch.stdout).unwrap();
    let alns: serde_json::Value = serde_json::from_slice(&alns.stdout).unwrap();
    assert_eq!(ch["twtt"], ch["ch_twtt"]);
    assert!(ch["meta"].get("params").is_none());
    assert_eq!(alns["meta"]["params"]["nu1"], 100);
    assert!(alns["twtt"].as_f64().unwrap() <= alns["ch_twtt"].as_f64().unwrap());
}

#[test]
fn alns_config_file_overrides_defaults() {
    let dir = tempfile::tempdir().unwrap();
    day(dir.path());
    fs::write(dir.path().join("cfg.json"), r#"{"nu1": 7, "alpha": 0.9}"#).unwrap();
    let out = dwsrp(dir.path(), &["solve", "day.json", "--seed", "1", "--alns-config", "cfg.json", "--nu2", "3"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["meta"]["params"]["nu1"], 7);
    assert_eq!(v["meta"]["params"]["nu2"], 3);
    assert_eq!(v["meta"]["params"]["alpha"], 0.9);

    fs::write(dir.path().join("bad.json"), r#"{"sigma4": 0.5}"#).unwrap();
    let out = dwsrp(dir.path(), &["solve", "day.json", "--seed", "1", "--alns-config", "bad.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_table_has_cells_then_aggregates() {
    let dir = tempfile::tempdir().unwrap();
    day(dir.path());
    let out = dwsrp(dir.path(), &["sweep", "day.json", "--beta-task", "1,5", "--solver", "ch", "--seed", "2", "--replicates", "2"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().map(|l| l.split(',').collect()).collect();
    assert_eq!(rows[0][0], "schema");
    assert_eq!(rows.len(), 1 + 2 * (2 + 3));
    let labels: Vec<&str> = rows[1..].iter().map(|r| r[1]).collect();
    assert_eq!(labels, ["day.json", "day.json", "Min", "Max", "Avg", "day.json", "day.json", "Min", "Max", "Avg"]);
    assert_eq!(rows[5][13], "n=2");
    // CH ignores the seed, so both replicates agree
    assert_eq!(rows[1][8], rows[2][8]);
    assert_eq!(rows[1][8], rows[5][8]);
}

#[test]
fn simulate_json_accounts_for_every_task() {
    let dir = tempfile::tempdir().unwrap();
    day(dir.path());
    let out = dwsrp(dir.path(), &["simulate", "day.json", "--seed", "1", "--beta-task", "1", "--frozen", "maxtp"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["tasks"].as_array().unwrap().len(), 12);
    assert_eq!(v["meta"]["strategy"]["frozen"], "maxtp");
    let total: f64 = v["epochs"].as_array().unwrap().iter().map(|e| e["finalized_twtt"].as_f64().unwrap()).sum::<f64>()
        + v["closing_twtt"].as_f64().unwrap();
    assert!((total - v["twtt"].as_f64().unwrap()).abs() < 1e-6);
}

#[test]
fn metrics_match_the_generator() {
    let dir = tempfile::tempdir().unwrap();
    day(dir.path());
    let out = dwsrp(dir.path(), &["metrics", "day.json"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v[0]["delta"], (12.0 - 4.0) / 12.0);
    assert_eq!(v[0]["n"], 12);
}

#[test]
fn import_rejects_inconsistent_values() {
    let dir = tempfile::tempdir().unwrap();
    day(dir.path());
    // everything at zero: no crew leaves the depot and nothing is outsourced
    fs::write(dir.path().join("zeros.txt"), "O_1 0\n").unwrap();
    let out = dwsrp(dir.path(), &["import-solution", "day.json", "zeros.txt"]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(error_line(&out)["error"], "infeasible");
}
