//! Drives the compiled `ruelle` binary end to end: exit codes, error
//! wording on bad configs, and the artifact files a run leaves behind.
//! Numerical content is covered by the unit and acceptance suites; these
//! tests care about the shell contract.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn ruelle(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ruelle"))
        .args(args)
        .output()
        .expect("binary should launch")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn artifacts_with_extension(dir: &Path, ext: &str) -> Vec<PathBuf> {
    let mut found: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().map(|x| x == ext).unwrap_or(false))
        .collect();
    found.sort();
    found
}

const PRESSURE: &str = r#"{
    "command": "pressure",
    "state_space": {"type": "finite", "labels": ["-1", "+1"]},
    "potential": {"name": "single_site", "params": {"beta": 1.0}},
    "n_max": 8,
    "m": 2
}"#;

#[test]
fn list_potentials_names_every_registered_family() {
    let out = ruelle(&["list-potentials"]);
    assert!(out.status.success());
    let text = stdout_of(&out);
    for name in [
        "constant",
        "single_site",
        "ising",
        "finite_range",
        "long_range",
        "double_hofbauer",
    ] {
        assert!(text.contains(name), "missing {name} in:\n{text}");
    }
}

#[test]
fn validate_reports_the_command_and_potential() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), "p.json", PRESSURE);
    let out = ruelle(&["validate", "--config", &config]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let text = stdout_of(&out);
    assert!(text.contains("ok: pressure run over potential \"single_site\""), "{text}");
}

#[test]
fn misspelled_top_level_key_is_named_and_exits_2() {
    let dir = TempDir::new().unwrap();
    // "tolerance" is close to the real knob ("tol") but not it
    let body = PRESSURE.replace("\"n_max\": 8", "\"n_max\": 8, \"tolerance\": 1e-9");
    let config = write_config(dir.path(), "p.json", &body);
    let out = ruelle(&["validate", "--config", &config]);
    assert_eq!(out.status.code(), Some(2));
    let text = stderr_of(&out);
    assert!(text.contains("tolerance"), "{text}");
}

#[test]
fn unknown_potential_is_named_and_exits_2() {
    let dir = TempDir::new().unwrap();
    let body = PRESSURE.replace("single_site", "foo");
    let config = write_config(dir.path(), "p.json", &body);
    let out = ruelle(&["validate", "--config", &config]);
    assert_eq!(out.status.code(), Some(2));
    let text = stderr_of(&out);
    assert!(text.contains("foo"), "{text}");
}

#[test]
fn sampling_without_a_seed_is_refused() {
    let dir = TempDir::new().unwrap();
    let body = r#"{
        "command": "kernel",
        "state_space": {"type": "finite", "labels": ["0", "1"]},
        "potential": {"name": "constant", "params": {"c": 0.0}},
        "n": 4,
        "sampling": true
    }"#;
    let config = write_config(dir.path(), "k.json", body);
    let out = ruelle(&["validate", "--config", &config]);
    assert_eq!(out.status.code(), Some(2));
    let text = stderr_of(&out);
    assert!(text.contains("seed"), "{text}");
}

#[test]
fn run_writes_matching_json_and_csv_artifacts() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), "p.json", PRESSURE);
    let out_dir = dir.path().join("out");
    let out = ruelle(&["run", "--config", &config, "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    assert!(stdout_of(&out).contains("wrote "));

    let jsons = artifacts_with_extension(&out_dir, "json");
    let csvs = artifacts_with_extension(&out_dir, "csv");
    assert_eq!(jsons.len(), 1);
    assert_eq!(csvs.len(), 1);
    assert_eq!(jsons[0].file_stem(), csvs[0].file_stem());
    let stem = jsons[0].file_stem().unwrap().to_string_lossy().into_owned();
    assert!(stem.starts_with("pressure_"), "{stem}");

    let csv = std::fs::read_to_string(&csvs[0]).unwrap();
    assert_eq!(csv.lines().next(), Some("n,p_n,cauchy_gap"));
    assert_eq!(csv.lines().count(), 9, "header plus one row per depth");

    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&jsons[0]).unwrap()).unwrap();
    assert_eq!(doc["command"], "pressure");
    assert!(doc["payload"]["final_estimate"].is_f64());
    assert_eq!(doc["config"]["n_max"], 8);
}

#[test]
fn set_override_lands_in_the_echo_and_the_artifact_name() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), "p.json", PRESSURE);

    let plain_dir = dir.path().join("plain");
    let out = ruelle(&["run", "--config", &config, "--out", plain_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr_of(&out));

    let set_dir = dir.path().join("set");
    let out = ruelle(&[
        "run",
        "--config",
        &config,
        "--set",
        "n_max=6",
        "--out",
        set_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));

    let plain = artifacts_with_extension(&plain_dir, "json");
    let set = artifacts_with_extension(&set_dir, "json");
    assert_ne!(plain[0].file_name(), set[0].file_name(), "override must change the hash");

    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&set[0]).unwrap()).unwrap();
    assert_eq!(doc["config"]["n_max"], 6);
    assert_eq!(doc["payload"]["entries"].as_array().unwrap().len(), 6);
}

#[test]
fn missing_config_file_exits_1() {
    let out = ruelle(&["run", "--config", "/nonexistent/nope.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("error:"));
}
