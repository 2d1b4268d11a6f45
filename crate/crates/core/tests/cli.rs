use std::path::Path;
use std::process::Command;

use glioma_control::io::{
    parse_config, parse_config_str, read_field_csv, run, Mode, RunConfig, RunManifest, RunStatus,
    MANIFEST_FILE,
};
use glioma_control::{build_grid, Error, FieldRole};
use proptest::prelude::*;
use serde_json::{json, Value};

fn small_config(mode: &str) -> Value {
    json!({
        "mode": mode,
        "grid": {"lengths": [5.0], "cells": [24], "num_time_steps": 20, "final_time": 0.5},
        "tissue": {"regions": {"intervals": [[0.75, 1.75]]}, "d_white": 1.0, "d_grey": 0.001},
        "control": {
            "shape": "distributed",
            "upper_bound": 1.0,
            "budget": 0.5,
            "penalty": 100.0,
            "proliferation": 1.0
        },
        "optimizer": {"max_iterations": 40},
        "initial_state": {"kind": "gaussian", "center": [2.5], "decay": 8.0},
        "initial_control": {"kind": "budget_uniform"},
        "output_dir": "unused",
        "seed": 7,
        "verify": {
            "invariance_seeds": 3,
            "necessary_samples": 200,
            "mms": {"temporal_steps": [10, 20, 40], "spatial_cells": [8, 16, 32], "spatial_steps": 4000}
        }
    })
}

fn write_config(dir: &Path, name: &str, value: &Value) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path
}

fn read_manifest(dir: &Path) -> RunManifest {
    serde_json::from_slice(&std::fs::read(dir.join(MANIFEST_FILE)).unwrap()).unwrap()
}

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_glioma-control"))
}

#[test]
fn forward_run_writes_every_time_node() {
    let tmp = tempfile::tempdir().unwrap();
    let mut config: RunConfig =
        parse_config_str(&small_config("forward").to_string(), tmp.path()).unwrap();
    config.output_dir = tmp.path().join("out");
    let manifest = run(&config).unwrap();
    assert_eq!(manifest.status, RunStatus::Complete);
    assert!(manifest.verify_files(&config.output_dir).is_empty());

    let text = std::fs::read_to_string(config.output_dir.join("state.csv")).unwrap();
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    assert_eq!(header[..2], ["cell", "x"]);
    assert_eq!(header.len() - 2, 21);
    assert_eq!(text.lines().count(), 25);

    let grid = build_grid(&config.grid).unwrap();
    let state = read_field_csv(
        &config.output_dir.join("state.csv"),
        &grid,
        FieldRole::State,
    )
    .unwrap();
    assert!(state.min() >= 0.0 && state.max() <= 1.0);
}

#[test]
fn manifest_detects_tampering() {
    let tmp = tempfile::tempdir().unwrap();
    let mut config = parse_config_str(&small_config("adjoint").to_string(), tmp.path()).unwrap();
    config.output_dir = tmp.path().join("out");
    let manifest = run(&config).unwrap();
    let names: Vec<&str> = manifest.files.iter().map(|f| f.name.as_str()).collect();
    for expected in [
        "state.csv",
        "adjoint.csv",
        "sensitivity_weight.csv",
        "descent_direction.csv",
    ] {
        assert!(names.contains(&expected), "{names:?}");
    }
    std::fs::write(config.output_dir.join("adjoint.csv"), "cell,x\n").unwrap();
    assert_eq!(manifest.verify_files(&config.output_dir), ["adjoint.csv"]);
}

#[test]
fn unknown_fields_and_modes_report_their_path() {
    let mut bad = small_config("forward");
    bad["grid"]["cell"] = json!([10]);
    match parse_config_str(&bad.to_string(), Path::new(".")) {
        Err(Error::Config { path, .. }) => assert_eq!(path, "grid.cell"),
        other => panic!("{other:?}"),
    }
    let bad_mode = small_config("simulate");
    match parse_config_str(&bad_mode.to_string(), Path::new(".")) {
        Err(Error::Config { path, .. }) => assert_eq!(path, "mode"),
        other => panic!("{other:?}"),
    }
    assert!("simulate".parse::<Mode>().is_err());
}

#[test]
fn infeasible_budget_is_rejected() {
    let mut bad = small_config("forward");
    // Γ > M·T·|Ω| = 1 · 0.5 · 5
    bad["control"]["budget"] = json!(3.0);
    assert!(matches!(
        parse_config_str(&bad.to_string(), Path::new(".")),
        Err(Error::Infeasible { .. })
    ));
}

#[test]
fn state_file_inputs_resolve_against_config_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let mut first = parse_config_str(&small_config("forward").to_string(), tmp.path()).unwrap();
    first.output_dir = tmp.path().join("first");
    run(&first).unwrap();

    let mut value = small_config("forward");
    value["initial_state"] = json!({"kind": "file", "path": "first/state.csv"});
    value["initial_control"] = json!({"kind": "file", "path": "first/control.csv"});
    let path = write_config(tmp.path(), "from_file.json", &value);
    let second = parse_config(&path).unwrap();
    let setup = second.setup().unwrap();
    let original = first.setup().unwrap();
    for (a, b) in setup
        .problem
        .initial_state()
        .iter()
        .zip(original.problem.initial_state())
    {
        assert_eq!(a, b);
    }
    assert_eq!(setup.initial_control, original.initial_control);
}

#[test]
fn repeated_cli_runs_produce_identical_files() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write_config(tmp.path(), "opt.json", &small_config("optimize"));
    let mut hashes = Vec::new();
    for name in ["a", "b"] {
        let out = tmp.path().join(name);
        let status = binary()
            .args(["--config", path.to_str().unwrap(), "--output-dir"])
            .arg(&out)
            .output()
            .unwrap();
        assert!(status.status.success());
        let manifest = read_manifest(&out);
        assert_eq!(manifest.mode, Mode::Optimize);
        assert!(manifest.verify_files(&out).is_empty());
        hashes.push(
            manifest
                .files
                .into_iter()
                .map(|f| (f.name, f.sha256))
                .collect::<Vec<_>>(),
        );
    }
    assert_eq!(hashes[0], hashes[1]);
}

#[test]
fn cli_flags_override_the_file() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write_config(tmp.path(), "opt.json", &small_config("optimize"));
    let out = tmp.path().join("override");
    let status = binary()
        .args([
            "--config",
            path.to_str().unwrap(),
            "--mode",
            "forward",
            "--seed",
            "99",
            "--output-dir",
        ])
        .arg(&out)
        .output()
        .unwrap();
    assert!(status.status.success());
    let manifest = read_manifest(&out);
    assert_eq!(manifest.mode, Mode::Forward);
    assert_eq!(manifest.config.seed, 99);
    assert!(!out.join("history.csv").exists());
}

#[test]
fn cli_verify_mode_passes_on_small_problem() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write_config(tmp.path(), "verify.json", &small_config("verify"));
    let out = tmp.path().join("verify");
    let output = binary()
        .args(["--config", path.to_str().unwrap(), "--output-dir"])
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(
        output.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    let manifest = read_manifest(&out);
    assert_eq!(manifest.checks_passed, Some(true));
    let report: Value =
        serde_json::from_slice(&std::fs::read(out.join("verification_report.json")).unwrap())
            .unwrap();
    let records = report["records"].as_array().unwrap();
    assert!(records.len() > 10);
    assert!(records.iter().all(|r| r["pass"] == json!(true)));
}

#[test]
fn cli_failures_exit_nonzero() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = binary()
        .args(["--config", tmp.path().join("absent.json").to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));

    // one Newton iteration cannot reach the tolerance: the run fails after
    // the output directory exists, so a failed manifest is left behind
    let mut value = small_config("forward");
    value["solver"] = json!({"newton_max_iterations": 1});
    let path = write_config(tmp.path(), "diverge.json", &value);
    let out = tmp.path().join("diverge");
    let status = binary()
        .args(["--config", path.to_str().unwrap(), "--output-dir"])
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(2));
    let manifest = read_manifest(&out);
    assert_eq!(manifest.status, RunStatus::Failed);
    assert!(manifest.error.unwrap().contains("Newton"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn config_survives_json_round_trip(
        cells in 4usize..60,
        steps in 1usize..50,
        budget_fraction in 0.01f64..0.99,
        penalty in 0.0f64..1e3,
        seed in any::<u64>(),
        distributed in any::<bool>(),
        mode in prop::sample::select(vec!["forward", "adjoint", "optimize", "verify"]),
    ) {
        let mut value = small_config(mode);
        value["grid"]["cells"] = json!([cells]);
        value["grid"]["num_time_steps"] = json!(steps);
        value["control"]["budget"] = json!(budget_fraction * 2.5);
        value["control"]["penalty"] = json!(penalty);
        value["control"]["shape"] = json!(if distributed { "distributed" } else { "uniform_in_space" });
        value["seed"] = json!(seed);
        let config = parse_config_str(&value.to_string(), Path::new(".")).unwrap();
        let again = parse_config_str(&config.to_json(), Path::new(".")).unwrap();
        prop_assert_eq!(config, again);
    }
}
