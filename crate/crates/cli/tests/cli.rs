use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn nlkernel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nlkernel"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const GEN: &str = r#"{"generator": {"kind": "manufactured", "kernel": {"shape": "cosine_sign_changing"},
  "delta": 0.5, "corpus": "mixed"}, "n_samples": 40, "seed": 7}"#;

fn generate(tmp: &TempDir, name: &str) -> String {
    let cfg = write(tmp.path(), "gen.json", GEN);
    let out = tmp.path().join(name);
    let o = nlkernel(&["generate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out.to_str().unwrap().to_owned()
}

#[test]
fn generate_is_byte_reproducible() {
    let tmp = TempDir::new().unwrap();
    let a = generate(&tmp, "a");
    let b = generate(&tmp, "b");
    for file in ["u.csv", "f.csv", "meta.json"] {
        let fa = std::fs::read(Path::new(&a).join(file)).unwrap();
        let fb = std::fs::read(Path::new(&b).join(file)).unwrap();
        assert_eq!(fa, fb, "{file} differs");
    }
}

#[test]
fn train_then_eval_agree_on_loss() {
    let tmp = TempDir::new().unwrap();
    let ds = generate(&tmp, "ds");
    let cfg = write(
        tmp.path(),
        "train.json",
        r#"{"delta": 0.5, "order": 4, "stage1_max_epochs": 30}"#,
    );
    let out = tmp.path().join("tr");
    let o = nlkernel(&[
        "train",
        "--config",
        &cfg,
        "--dataset",
        &ds,
        "--out",
        out.to_str().unwrap(),
        "--stage",
        "1",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["model.json", "train_report.json", "loss.csv", "resolved_config.json"] {
        assert!(out.join(f).exists(), "missing {f}");
    }
    let report = read_json(&out.join("train_report.json"));
    let train_loss = report["report"]["stage1"]["final_loss"].as_f64().unwrap();
    assert!(report["report"]["stage2"].is_null());

    let model = out.join("model.json");
    let o = nlkernel(&["eval", "--model", model.to_str().unwrap(), "--dataset", &ds]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let eval: Value = serde_json::from_slice(&o.stdout).unwrap();
    let eval_loss = eval["metrics"]["validation_loss"].as_f64().unwrap();
    assert!(
        (eval_loss - train_loss).abs() <= 1e-8 * train_loss.abs().max(1.0),
        "eval {eval_loss} vs train {train_loss}"
    );
}

#[test]
fn solve_writes_every_node() {
    let tmp = TempDir::new().unwrap();
    let model = write(
        tmp.path(),
        "model.json",
        r#"{"variant": "standard", "d": 1, "delta": 0.5, "order": 2, "C": [1.0, 0.5, 2.0], "D": [0.0, 0.0, 0.0]}"#,
    );
    let cfg = write(
        tmp.path(),
        "solve.json",
        r#"{"grid": {"a": 0.0, "b": 1.0, "n": 100, "bc": {"kind": "periodic"}},
            "forcing": {"kind": "fourier", "period": 1.0, "terms": [[1, 0.0, 1.0]]}}"#,
    );
    let out = tmp.path().join("so");
    let o = nlkernel(&[
        "solve",
        "--model",
        &model,
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("solution.csv")).unwrap();
    assert_eq!(csv.lines().count(), 102);
    let report = read_json(&out.join("solve_report.json"));
    assert!(report["lambda_min"].as_f64().unwrap() > 0.0);
}

#[test]
fn unknown_config_key_is_reported_with_location() {
    let tmp = TempDir::new().unwrap();
    let ds = generate(&tmp, "ds");
    let cfg = write(tmp.path(), "bad.json", "{\"delta\": 0.5,\n \"bogus\": 1}");
    let out = tmp.path().join("tr");
    let o = nlkernel(&[
        "train",
        "--config",
        &cfg,
        "--dataset",
        &ds,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bogus") && err.contains("line 2"), "{err}");
}

#[test]
fn invalid_inputs_exit_nonzero() {
    let tmp = TempDir::new().unwrap();
    let missing = tmp.path().join("nope.json");
    let o = nlkernel(&["generate", "--config", missing.to_str().unwrap(), "--out", "x"]);
    assert_eq!(o.status.code(), Some(1));
    let o = nlkernel(&["reproduce", "nonsense", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let o = nlkernel(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
    let o = nlkernel(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
}
