use std::fs;
use std::process::{Command, Output};

fn dynlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dynlab")).args(args).env_remove("DYNLAB_OUT").output().unwrap()
}

fn json(path: &std::path::Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn passing_experiment_exits_zero_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("shadow.json");
    let o = dynlab(&["experiment", "shadowing", "--seed", "5", "--samples", "10", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&out);
    assert_eq!(r["outcome"], "pass");
    assert_eq!(r["config"]["seed"], 5);
}

#[test]
fn failing_experiment_exits_two() {
    let o = dynlab(&["experiment", "entropy", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn randomized_run_without_seed_is_an_error() {
    let o = dynlab(&["experiment", "shadowing"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("seed"));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "seed = 3\nsamples = 4\ndelta = 0.5\n").unwrap();
    let out = dir.path().join("r.json");
    let o = dynlab(&[
        "experiment", "shadowing", "--config", cfg.to_str().unwrap(), "--delta", "0.0001", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&out);
    assert_eq!(r["config"]["seed"], 3);
    assert_eq!(r["config"]["samples"], 4);
    assert_eq!(r["config"]["delta"], 0.0001);
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "sed = 3\n").unwrap();
    let o = dynlab(&["experiment", "shadowing", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_dynlab"))
        .args(["ball", "--system", "example1", "--point", "p3", "--epsilon", "0.1", "--format", "csv"])
        .env("DYNLAB_OUT", dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("ball.csv")).unwrap();
    assert!(csv.lines().count() > 1);
}

#[test]
fn ball_of_a_cat_point_is_trivial() {
    let o = dynlab(&["ball", "--system", "cat", "--point", "1/3,2/7", "--epsilon", "0.05"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["verdict"]["classification"]["class"], "trivial");
}

#[test]
fn shadow_and_chains_subcommands() {
    let o = dynlab(&["shadow", "--point", "0.1,0.2", "--seed", "9", "--length", "200"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(r["shadow"]["epsilon_achieved"].as_f64().unwrap() <= 5f64.sqrt() * 1e-4 * (1.0 + 1e-6));

    let o = dynlab(&["chains", "--system", "example1", "--delta", "0.1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["class_counts"][0]["singleton_ideal"], 10);
}

#[test]
fn horseshoe_depth_is_capped() {
    let o = dynlab(&["horseshoe", "--depth", "13"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn same_seed_same_report() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("r.json");
    let run = || {
        let o = dynlab(&["experiment", "asymptotic", "--seed", "11", "--out", p.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        let mut v = json(&p);
        v.as_object_mut().unwrap().remove("wall_time_s");
        v
    };
    assert_eq!(run(), run());
}
