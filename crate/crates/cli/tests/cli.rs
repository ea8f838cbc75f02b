//! End-to-end behavior of the `tw` binary: exit codes, aliasing, seed
//! override, and output determinism.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tw"))
}

fn tmp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("tw-cli-{}-{name}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &PathBuf, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    bin().args(args).env_remove("TW_SEED").output().unwrap()
}

const BASIC: &str = r#"{
    "route": {"homogeneous": {"family": "normal", "mean": 10, "sd": 2.5, "count": 4}},
    "omega": 0.5,
    "penalty": {"kind": "power", "alpha": 0.1, "beta": 1.5},
    "engine": {"mode": "exact_normal"},
    "seed": 5
}"#;

#[test]
fn usage_errors_exit_1() {
    let out = run(&["solve", "--config", "/definitely/not/here.json"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn solver_errors_exit_2_citing_condition() {
    let dir = tmp_dir("exist");
    let cfg = write_config(
        &dir,
        "bad.json",
        r#"{
            "route": {"homogeneous": {"family": "normal", "mean": 10, "sd": 2.5, "count": 2}},
            "omega": 0.5,
            "penalty": {"kind": "linear", "alpha": 0.6}
        }"#,
    );
    let out = run(&["solve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("alpha <= min(omega, 1-omega)"), "{err}");
}

#[test]
fn data_errors_exit_3() {
    let dir = tmp_dir("data");
    let bad = dir.join("bad.csv");
    fs::write(&bad, "dist,time\n1,2\n").unwrap();
    let out = run(&["fit-data", "--data", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("distance_km,time_min"), "{err}");
}

#[test]
fn solve_uniform_is_alias_on_single_client() {
    let dir = tmp_dir("alias");
    let cfg = write_config(
        &dir,
        "one.json",
        r#"{
            "route": {"homogeneous": {"family": "normal", "mean": 10, "sd": 2.5, "count": 1}},
            "omega": 0.5,
            "penalty": {"kind": "power", "alpha": 0.1, "beta": 1.5},
            "engine": {"mode": "exact_normal"}
        }"#,
    );
    let a = run(&["solve", "--config", cfg.to_str().unwrap()]);
    let b = run(&["solve-uniform", "--config", cfg.to_str().unwrap()]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn tw_seed_env_overrides_config_seed() {
    let dir = tmp_dir("seed");
    let cfg = write_config(&dir, "cfg.json", BASIC);
    let out = bin()
        .args(["solve", "--config", cfg.to_str().unwrap(), "--seed", "99"])
        .env("TW_SEED", "1234")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("# seed=1234"), "{text}");
    // without the env var the flag wins over the config value
    let out = run(&["solve", "--config", cfg.to_str().unwrap(), "--seed", "99"]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("# seed=99"));
}

#[test]
fn solve_reruns_are_byte_identical() {
    let dir = tmp_dir("det");
    let cfg = write_config(&dir, "cfg.json", BASIC);
    let out_a = dir.join("a.csv");
    let out_b = dir.join("b.csv");
    for (path, _) in [(&out_a, 0), (&out_b, 1)] {
        let out = run(&["solve", "--config", cfg.to_str().unwrap(), "--out", path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
    }
    assert_eq!(fs::read(&out_a).unwrap(), fs::read(&out_b).unwrap());
}

#[test]
fn simulate_threshold_above_horizon_reports_zero() {
    let dir = tmp_dir("sim0");
    let cfg = write_config(
        &dir,
        "cfg.json",
        r#"{
            "route": {"homogeneous": {"family": "normal", "mean": 10, "sd": 2.5, "count": 4}},
            "omega": 0.5,
            "penalty": {"kind": "power", "alpha": 0.1, "beta": 1.5},
            "engine": {"mode": "exact_normal"},
            "seed": 5,
            "dwos": {"runs": 5, "notice_thresholds": [100000]}
        }"#,
    );
    let out = run(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    let row = text
        .lines()
        .find(|l| l.starts_with("100000"))
        .unwrap_or_else(|| panic!("no data row in {text}"));
    assert!(row.ends_with(",0.000000"), "{row}");
}

#[test]
fn evaluate_requires_block() {
    let dir = tmp_dir("eval");
    let cfg = write_config(&dir, "cfg.json", BASIC);
    let out = run(&["evaluate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}
