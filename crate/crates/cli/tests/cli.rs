use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

fn preset(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../presets")
        .join(format!("{name}.json"))
}

struct Outcome {
    code: i32,
    stdout: String,
    stderr: String,
}

fn levyflow(args: &[&str], threads: Option<&str>) -> Outcome {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_levyflow"));
    cmd.args(args);
    if let Some(n) = threads {
        cmd.env("LEVYFLOW_THREADS", n);
    }
    let out = cmd.output().unwrap();
    Outcome {
        code: out.status.code().unwrap(),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn manifest(dir: &Path) -> Value {
    read_json(&dir.join("manifest.json"))
}

#[test]
fn emitted_config_reloads_with_the_same_hash() {
    let dir = tempfile::tempdir().unwrap();
    let first = levyflow(
        &[
            "check-config",
            "--config",
            preset("tanh_holder").to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(first.code, 0, "{}", first.stderr);
    let summary: Value = serde_json::from_str(&first.stdout).unwrap();
    let emitted = dir.path().join("emitted.json");
    std::fs::write(&emitted, serde_json::to_string(&summary["config"]).unwrap()).unwrap();
    let second = levyflow(
        &["check-config", "--config", emitted.to_str().unwrap()],
        None,
    );
    let again: Value = serde_json::from_str(&second.stdout).unwrap();
    assert_eq!(summary["hash"], again["hash"]);
}

#[test]
fn rotation_preset_is_regime_b() {
    let out = levyflow(
        &[
            "check-config",
            "--config",
            preset("rotation").to_str().unwrap(),
        ],
        None,
    );
    let summary: Value = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(summary["regime"], "B");
    let eps = summary["epsilon0"].as_f64().unwrap();
    assert!((eps - 43.0 / 900.0).abs() < 1e-12, "{eps}");
}

#[test]
fn invalid_config_exits_with_a_field_path() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"noise":[{"alpha":2.5}],"drift":{"kind":"zero","dim":1},"matrix":{"kind":"identity","dim":1}}"#,
    )
    .unwrap();
    let out = levyflow(
        &[
            "--config",
            bad.to_str().unwrap(),
            "--out",
            dir.path().to_str().unwrap(),
            "scaling",
        ],
        None,
    );
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("noise[0].alpha"), "{}", out.stderr);
    assert!(
        out.stderr.contains("stability index outside (0,2)"),
        "{}",
        out.stderr
    );
}

#[test]
fn simulation_without_a_seed_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("noseed.json");
    std::fs::write(
        &cfg,
        r#"{"noise":[{"alpha":1.0}],"drift":{"kind":"zero","dim":1},"matrix":{"kind":"identity","dim":1}}"#,
    )
    .unwrap();
    let out = levyflow(
        &[
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            dir.path().to_str().unwrap(),
            "simulate",
            "--direct",
            "--n",
            "100",
        ],
        None,
    );
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("seed"), "{}", out.stderr);
}

#[test]
fn manifest_lists_every_output_and_passing_runs_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = levyflow(
        &[
            "--config",
            preset("linear_2d_constant").to_str().unwrap(),
            "--out",
            dir.path().to_str().unwrap(),
            "flow-certify",
        ],
        None,
    );
    assert_eq!(out.code, 0, "{}{}", out.stdout, out.stderr);
    let m = manifest(dir.path());
    assert_eq!(m["pass"], true);
    let listed: Vec<String> = m["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().to_string())
        .collect();
    let mut on_disk: Vec<String> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n != "manifest.json")
        .collect();
    on_disk.sort();
    let mut sorted = listed.clone();
    sorted.sort();
    assert_eq!(sorted, on_disk);
    assert!(m["config_hash"].as_str().is_some_and(|h| h.len() == 64));
}

#[test]
fn failing_verdict_exits_one_and_names_the_check() {
    let dir = tempfile::tempdir().unwrap();
    let out = levyflow(
        &[
            "--out",
            dir.path().to_str().unwrap(),
            "example-rotation",
            "--alphas",
            "0.5,1.0",
            "--t",
            "0.05,0.1,0.2",
        ],
        None,
    );
    assert_eq!(out.code, 1, "{}{}", out.stdout, out.stderr);
    assert!(
        out.stderr.contains("failing checks: regime"),
        "{}",
        out.stderr
    );
    let m = manifest(dir.path());
    assert_eq!(m["pass"], false);
}

#[test]
fn simulation_csv_is_reproducible_across_runs_and_threads() {
    let cfg = preset("rotation");
    let mut files = Vec::new();
    for threads in ["1", "1", "3"] {
        let dir = tempfile::tempdir().unwrap();
        let out = levyflow(
            &[
                "--config",
                cfg.to_str().unwrap(),
                "--out",
                dir.path().to_str().unwrap(),
                "simulate",
                "--reduced",
                "--n",
                "2000",
                "--h",
                "1e-2",
                "--t",
                "0.5",
            ],
            Some(threads),
        );
        assert_eq!(out.code, 0, "{}", out.stderr);
        files.push(std::fs::read(dir.path().join("ensemble_reduced.csv")).unwrap());
    }
    assert_eq!(files[0], files[1]);
    assert_eq!(files[0], files[2]);
}

#[test]
fn both_schemes_agree_on_the_rotation_preset() {
    let dir = tempfile::tempdir().unwrap();
    let out = levyflow(
        &[
            "--config",
            preset("rotation").to_str().unwrap(),
            "--out",
            dir.path().to_str().unwrap(),
            "--seed",
            "7",
            "simulate",
            "--both",
            "--n",
            "20000",
            "--h",
            "1e-3",
            "--t",
            "0.5",
        ],
        None,
    );
    assert_eq!(out.code, 0, "{}{}", out.stdout, out.stderr);
    let law = read_json(&dir.path().join("law_report.json"));
    for ks in law["per_coordinate"].as_array().unwrap() {
        assert!(ks["p_value"].as_f64().unwrap() >= 0.01, "{ks}");
    }
}

#[test]
fn residual_fit_on_the_linear_preset_meets_epsilon0() {
    let dir = tempfile::tempdir().unwrap();
    let out = levyflow(
        &[
            "--config",
            preset("linear_1d").to_str().unwrap(),
            "--out",
            dir.path().to_str().unwrap(),
            "density",
            "--residual-fit",
            "--t",
            "0.2,0.1,0.05,0.025",
        ],
        None,
    );
    assert_eq!(out.code, 0, "{}{}", out.stdout, out.stderr);
    let fit = read_json(&dir.path().join("residual_fit.json"))["fit"].clone();
    let slope = fit["slope"].as_f64().unwrap();
    assert!(slope >= fit["epsilon0"].as_f64().unwrap(), "{fit}");
}

#[test]
fn rotation_example_reports_the_vanishing_regime() {
    let dir = tempfile::tempdir().unwrap();
    let out = levyflow(
        &[
            "--out",
            dir.path().to_str().unwrap(),
            "example-rotation",
            "--alphas",
            "0.4,0.95",
            "--t",
            "0.02:0.3",
        ],
        None,
    );
    assert_eq!(out.code, 0, "{}{}", out.stdout, out.stderr);
    let r = read_json(&dir.path().join("rotation_regime.json"));
    assert_eq!(r["observed"], "vanishing");
    assert_eq!(r["t_list"].as_array().unwrap().len(), 5);
    let csv = std::fs::read_to_string(dir.path().join("rotation_ratios.csv")).unwrap();
    assert_eq!(csv.lines().count(), 6);
}
