use std::fs;
use std::path::Path;
use std::process::Command;

use grushin::cli::*;
use grushin::Error;

fn lab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_grushin-lab"))
}

fn config_error(text: &str) -> (usize, String) {
    match parse_config(text) {
        Err(Error::Config { line, msg }) => (line, msg),
        other => panic!("expected a config error, got {other:?}"),
    }
}

#[test]
fn parses_scenario_and_overrides() {
    let cfg = parse_config("scenario = hardy\nalpha = 0.5   # weight exponent\n\n").unwrap();
    assert_eq!(cfg.scenario, Scenario::Hardy);
    assert_eq!(cfg.alpha, 0.5);
    assert_eq!(cfg.nu, 0.5);

    let cfg = parse_config("scenario = control\nspec = decoupled\nbeta = 1e-2, 1e-4\nT = 2\nomega = -0.9, -0.1, 0, 1").unwrap();
    assert_eq!(cfg.spec, SpecLabel::Decoupled);
    assert_eq!(cfg.beta, vec![1e-2, 1e-4]);
    assert_eq!(cfg.t_final, 2.0);
    assert_eq!(cfg.omega, [-0.9, -0.1, 0.0, 1.0]);
}

#[test]
fn rejects_out_of_range_nu() {
    let (line, msg) = config_error("scenario = spectrum\nnu = 1.5\n");
    assert_eq!(line, 2);
    assert!(msg.contains("nu = 1.5 is outside the supported range [0.05, 0.95]"), "{msg}");
}

#[test]
fn reports_missing_scenario_and_bad_lines() {
    let (_, msg) = config_error("");
    assert!(msg.contains("missing required key `scenario`"));
    let (line, msg) = config_error("scenario = hardy\nwidth = 3\n");
    assert_eq!(line, 2);
    assert!(msg.contains("unknown key `width`"));
    let (line, msg) = config_error("scenario = hardy\nalpha = 0\nalpha = 1\n");
    assert_eq!(line, 3);
    assert!(msg.contains("duplicate key"));
    let (_, msg) = config_error("scenario = heat\n");
    assert!(msg.contains("expected one of"));
    let (_, msg) = config_error("scenario = spectrum\ncells = 101\n");
    assert!(msg.contains("must be even"));
    let (_, msg) = config_error("scenario = hardy\nalpha = 2\n");
    assert!(msg.contains("alpha"));
    let (line, _) = config_error("scenario = hardy\njust words\n");
    assert_eq!(line, 2);
}

#[test]
fn scenario_names_round_trip() {
    for sc in Scenario::ALL {
        assert_eq!(sc.name().parse::<Scenario>().unwrap(), sc);
    }
}

fn csv_bodies(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    out.sort();
    out
}

#[test]
fn runs_are_deterministic() {
    for text in [
        "scenario = spectrum\ncells = 60\nseed = 3\n",
        "scenario = hardy\nsamples = 20\nseed = 11\n",
        "scenario = evolve1d\ncells = 40\nT = 0.1\nsamples = 10\ndt = 1e-3\nseed = 5\n",
    ] {
        let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
        for d in &dirs {
            let mut cfg = parse_config(text).unwrap();
            cfg.out = d.path().to_path_buf();
            let outcome = run(&cfg).unwrap();
            assert!(outcome.passed(), "{:?}", outcome.failures);
        }
        let (a, b) = (csv_bodies(dirs[0].path()), csv_bodies(dirs[1].path()));
        assert!(!a.is_empty());
        assert_eq!(a, b, "{text}");
    }
}

#[test]
fn summary_records_config_and_results() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::defaults(Scenario::ExtensionCheck);
    cfg.out = dir.path().to_path_buf();
    cfg.samples = 20;
    run(&cfg).unwrap();
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["scenario"], "extension-check");
    assert_eq!(summary["status"], "ok");
    assert_eq!(summary["config"]["nu"], 0.5);
    assert!(summary["files"].as_array().unwrap().iter().any(|f| f == "extension.csv"));
    assert!(!dir.path().join("failure.json").exists());
}

#[test]
fn binary_rejects_bad_config_with_exit_code_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.cfg");
    fs::write(&path, "scenario = spectrum\nnu = 1.5\n").unwrap();
    let out = lab().arg("--config").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2"), "{err}");
    assert!(err.contains("[0.05, 0.95]"), "{err}");

    let out = lab().args(["hardy", "--set", "alpha=5"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = lab().output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn binary_reports_invariant_failures_with_exit_code_two() {
    // two Crank-Nicolson steps cannot match the expansion to 1e-4
    let dir = tempfile::tempdir().unwrap();
    let out = lab()
        .args(["evolve1d", "--set", "cells=20", "--set", "T=0.1", "--set", "dt=0.05", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    let failure = fs::read_to_string(dir.path().join("failure.json")).unwrap();
    assert!(failure.contains("Crank-Nicolson"));
    assert!(dir.path().join("summary.json").exists());
}

#[test]
fn binary_runs_a_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let out = lab().args(["hardy", "--seed", "2", "--threads", "1", "--out"]).arg(dir.path()).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("hardy.csv").exists());
}
