use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("mdhopf-cli-{}-{tag}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn mdhopf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mdhopf")).args(args).output().unwrap()
}

fn run_ok(args: &[&str]) -> Output {
    let out = mdhopf(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn pipeline_is_deterministic_and_reports_the_first_example() {
    let cfg = config("case1.toml");
    let (a, b) = (scratch("pipe-a"), scratch("pipe-b"));
    for dir in [&a, &b] {
        run_ok(&["--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap(), "pipeline"]);
    }
    let (ja, jb) = (std::fs::read(a.join("pipeline.json")).unwrap(), std::fs::read(b.join("pipeline.json")).unwrap());
    assert_eq!(ja, jb);
    let v = json(&a.join("pipeline.json"));
    let point = &v["normal_form"]["point"];
    assert!((point["d21_c"].as_f64().unwrap() - 6.9618).abs() < 1e-4);
    assert!((point["tau_c"].as_f64().unwrap() - 13.1290).abs() < 1e-4);
    let p = &v["normal_form"]["amplitude"]["p"];
    assert!((p[0][0].as_f64().unwrap() + 0.1428).abs() < 1e-3);
    assert!(v["reference_comparison"]["rows"].as_array().unwrap().len() >= 8);
}

#[test]
fn second_example_flags_reference_discrepancies() {
    let cfg = config("case2.toml");
    let dir = scratch("case2");
    run_ok(&["--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap(), "pipeline"]);
    let v = json(&dir.join("pipeline.json"));
    let flagged: Vec<String> = v["reference_comparison"]["entries_beyond_2_percent"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e.to_string())
        .collect();
    assert!(flagged.iter().any(|s| s.contains("p22")), "{flagged:?}");
    for ok in ["p11", "p12", "H1", "H2"] {
        assert!(!flagged.iter().any(|s| s.contains(ok)), "{flagged:?}");
    }
    assert_eq!(v["reference_comparison"]["h_lines_swapped"], true);
}

#[test]
fn normal_form_writes_report_and_manifest() {
    let cfg = config("case1.toml");
    let dir = scratch("nf");
    run_ok(&["--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap(), "normal-form", "--solver", "generic"]);
    let v = json(&dir.join("normal_form.json"));
    assert_eq!(v["amplitude"]["case"], "simple");
    assert!(v["diagnostics"]["h_residual"].as_f64().unwrap() < 1e-8);
    for key in ["2100", "1011", "0021", "1110"] {
        assert_eq!(v["B"][key].as_array().unwrap().len(), 2);
    }
    let manifest = json(&dir.join("normal-form.manifest.json"));
    assert!(manifest.to_string().contains("generic") || manifest.to_string().contains("Generic"));
}

#[test]
fn empty_range_gives_header_only_csv() {
    let cfg = config("case1.toml");
    let dir = scratch("empty");
    run_ok(&["--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap(), "stability-map", "--d21", "6.9:7.0:0"]);
    let text = std::fs::read_to_string(dir.join("stability_map.csv")).unwrap();
    assert_eq!(text.lines().count(), 1, "{text}");
    assert!(text.starts_with("d21,tau,verdict"));
}

#[test]
fn classify_points_from_flags() {
    let cfg = config("case1.toml");
    let dir = scratch("classify");
    run_ok(&["--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap(), "classify", "--at", "6.95:12.5"]);
    let text = std::fs::read_to_string(dir.join("classify.csv")).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[1].contains("StableEquilibrium"), "{text}");
}

#[test]
fn short_simulation_outputs() {
    let cfg = config("case1.toml");
    let dir = scratch("sim");
    run_ok(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
        "--seed",
        "7",
        "simulate",
        "--m",
        "64",
        "--t-end",
        "5",
        "--noise",
        "1e-4",
    ]);
    for file in ["trajectory.csv", "probe.csv", "modes.csv", "report.json", "simulate.manifest.json"] {
        assert!(dir.join(file).exists(), "{file}");
    }
    let manifest = json(&dir.join("simulate.manifest.json")).to_string();
    assert!(manifest.contains("\"dt\"") && manifest.contains("delay_steps"), "{manifest}");
    // Same seed, same bytes.
    let again = scratch("sim-again");
    run_ok(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        again.to_str().unwrap(),
        "--seed",
        "7",
        "simulate",
        "--m",
        "64",
        "--t-end",
        "5",
        "--noise",
        "1e-4",
    ]);
    assert_eq!(std::fs::read(dir.join("probe.csv")).unwrap(), std::fs::read(again.join("probe.csv")).unwrap());
}

#[test]
fn missing_model_file_is_an_error() {
    let dir = scratch("missing");
    let out = mdhopf(&["--out", dir.to_str().unwrap(), "equilibrium"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--config"));
    let out = mdhopf(&["--config", "/nonexistent/model.toml", "--out", dir.to_str().unwrap(), "equilibrium"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn validate_reports_every_criterion() {
    let dir = scratch("validate");
    let out = run_ok(&["--out", dir.to_str().unwrap(), "validate", "--no-properties"]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    for id in 1..=11 {
        assert!(stdout.contains(&format!("criterion {id:>2}")), "{stdout}");
    }
    assert!(dir.join("validate.json").exists());
}
