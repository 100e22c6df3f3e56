// End-to-end checks of the CLI binary: exit codes, diagnostics, artifact
// layout, and byte-stable reports.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mesoscatter"))
}

fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("mesoscatter_cli_{tag}_{}", std::process::id()));
    // A leftover from a crashed run would poison byte-comparison tests.
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &PathBuf, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const BASE: &str = r#"{
  "wave": { "k": 1.0, "theta": [0.0, 0.0, 1.0], "P": [1.0, 0.0, 0.0] },
  "cluster": { "type": "lattice", "n": 2, "c_r": 6.0 },
  "shape": { "shape": "sphere", "eps": 2.0, "mu": 1.5 },
  "ls": { "N": 4 },
  "direction_count": 10,
  "outputs": { "far_field_csv": "far.csv", "report_json": "report.json" }
}"#;

#[test]
fn non_orthogonal_polarization_exits_2_naming_the_field() {
    let dir = scratch("badp");
    let cfg = write_config(
        &dir,
        "exp.json",
        &BASE.replace("[1.0, 0.0, 0.0]", "[0.0, 0.0, 1.0]"),
    );
    let out = bin()
        .args(["foldy-lax", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_of(&out);
    assert!(
        err.contains("wave.P"),
        "diagnostic should name the field: {err}"
    );
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn declared_outputs_exist_after_zero_exit_run() {
    let dir = scratch("outputs");
    let cfg = write_config(&dir, "exp.json", BASE);
    let out = bin()
        .args(["foldy-lax", "--config"])
        .arg(&cfg)
        .arg("--out-dir")
        .arg(dir.join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    assert!(dir.join("out/far.csv").is_file());
    assert!(dir.join("out/report.json").is_file());
    let csv = fs::read_to_string(dir.join("out/far.csv")).unwrap();
    assert!(csv.starts_with("dir_x,dir_y,dir_z,"));
    // header + one row per direction
    assert_eq!(csv.lines().count(), 11);
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn unproducible_declared_output_is_rejected() {
    let dir = scratch("unproducible");
    let cfg = write_config(&dir, "exp.json", BASE);
    let out = bin().args(["k0", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_of(&out);
    assert!(
        err.contains("outputs.far_field_csv"),
        "diagnostic should name the output: {err}"
    );
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn sweep_reports_one_entry_per_c_r_and_a_slope() {
    let dir = scratch("sweep");
    let body = BASE.replace(
        "\"outputs\"",
        "\"sweep\": { \"c_r\": [2.0, 4.0, 8.0] },\n  \"outputs\"",
    );
    let body = body.replace("\"far_field_csv\": \"far.csv\", ", "");
    let cfg = write_config(&dir, "exp.json", &body);
    let run = |tag: &str| {
        let out = bin()
            .args(["sweep", "--config"])
            .arg(&cfg)
            .arg("--out-dir")
            .arg(dir.join(tag))
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
        fs::read(dir.join(tag).join("report.json")).unwrap()
    };
    let first = run("a");

    let parsed: serde_json::Value = serde_json::from_slice(&first).unwrap();
    let sweep = parsed["sweep"].as_array().unwrap();
    assert_eq!(sweep.len(), 3);
    for (point, c_r) in sweep.iter().zip([2.0, 4.0, 8.0]) {
        assert_eq!(point["c_r"].as_f64().unwrap(), c_r);
        assert!(point["rel_err"].as_f64().unwrap() > 0.0);
    }
    assert!(parsed["fitted_slope"].as_f64().unwrap().is_finite());
    // the config echo rides along for reproducibility
    assert!(parsed["config_echo"]["wave"]["k"].as_f64().unwrap() == 1.0);

    // identical config -> byte-identical report
    let second = run("b");
    assert_eq!(first, second);
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn solver_stall_exits_3_and_writes_residual_history() {
    let dir = scratch("stall");
    let body = BASE.replace(
        "\"ls\"",
        "\"solver\": { \"method\": \"iterative\", \"tol\": 1e-13, \"max_iter\": 2 },\n  \"ls\"",
    );
    let cfg = write_config(&dir, "exp.json", &body);
    let out = bin()
        .args(["foldy-lax", "--config"])
        .arg(&cfg)
        .arg("--out-dir")
        .arg(dir.join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", stderr_of(&out));
    let history = fs::read_to_string(dir.join("out/residual_history.txt")).unwrap();
    assert!(!history.trim().is_empty());
    for line in history.lines() {
        line.parse::<f64>().unwrap();
    }
    assert!(stderr_of(&out).contains("residual history"));
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn unknown_config_field_exits_2() {
    let dir = scratch("unknown");
    let cfg = write_config(&dir, "exp.json", &BASE.replace("\"ls\"", "\"lss\""));
    let out = bin().args(["k0", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn missing_config_file_exits_2() {
    let out = bin()
        .args(["k0", "--config", "/nonexistent/exp.json"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
