use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn hsbmo(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hsbmo"))
        .args(args)
        .current_dir(dir)
        .env_remove("HSBMO_THREADS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn verify_config(dir: &Path, calibration: &Path) -> PathBuf {
    let text = format!(
        r#"{{"grid": {{"dim": 1, "n": 2048, "h": 0.0078125}}, "seed": 5, "calibration": {:?}}}"#,
        calibration.to_str().unwrap()
    );
    write(dir, "verify.json", &text)
}

const SMALL_KERNEL: &str = r#"{"grid": {"dim": 1, "n": 64, "h": 0.125}, "operations": [{"op": "kernel"}]}"#;

#[test]
fn kernel_outputs_and_manifest_reproduce_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "k.json", SMALL_KERNEL);
    let cfg = cfg.to_str().unwrap();
    for out in ["a", "b"] {
        let o = hsbmo(dir.path(), &["kernel", "--config", cfg, "--out", out]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    for name in ["kernel_report.json", "kernel_properties.csv", "kernel.manifest.json", "kernel_0.bin"] {
        let a = std::fs::read(dir.path().join("a").join(name)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between runs");
    }
    let manifest = json(&dir.path().join("a/kernel.manifest.json"));
    let digest = manifest["outputs"]["kernel_report.json"].as_str().unwrap();
    let bytes = std::fs::read(dir.path().join("a/kernel_report.json")).unwrap();
    assert_eq!(digest, hsbmo::report::sha256_hex(&bytes));
    assert_eq!(manifest["context"]["system"], "laplacian");
    let report = json(&dir.path().join("a/kernel_report.json"));
    for k in report["kernels"].as_array().unwrap() {
        assert!(k["normalization_error"].as_f64().unwrap() < 1e-8);
    }
}

#[test]
fn malformed_and_unknown_configuration_exit_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", "{\"grid\": {\"dim\": 1,\n \"n\": 64 \"h\": 0.1}}");
    let o = hsbmo(dir.path(), &["kernel", "--config", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));

    let unknown = write(dir.path(), "u.json", r#"{"grid": {"dim": 1, "n": 64, "h": 0.1}, "colour": 1}"#);
    let o = hsbmo(dir.path(), &["kernel", "--config", unknown.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("colour"), "{}", stderr(&o));

    let grid = write(dir.path(), "g.json", r#"{"grid": {"dim": 1, "n": 100, "h": 0.1}}"#);
    assert_eq!(code(&hsbmo(dir.path(), &["kernel", "--config", grid.to_str().unwrap()])), 2);

    let missing = hsbmo(dir.path(), &["kernel", "--config", "nope.json"]);
    assert_eq!(code(&missing), 2);
}

#[test]
fn bad_thread_count_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_hsbmo"))
        .args(["kernel", "--out", "o"])
        .current_dir(dir.path())
        .env("HSBMO_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("HSBMO_THREADS"));
}

#[test]
fn corrupted_propagator_cache_is_a_numerical_fault() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"{"grid": {"dim": 1, "n": 64, "h": 0.125}, "propagator_cache": "cache.bin"}"#;
    let cfg = write(dir.path(), "k.json", text);
    let cfg = cfg.to_str().unwrap();
    assert_eq!(code(&hsbmo(dir.path(), &["kernel", "--config", cfg, "--out", "a"])), 0);
    let cache = dir.path().join("cache.bin");
    let mut bytes = std::fs::read(&cache).unwrap();
    let at = bytes.len() - 16;
    bytes[at..at + 8].copy_from_slice(&f64::NAN.to_le_bytes());
    std::fs::write(&cache, bytes).unwrap();
    let o = hsbmo(dir.path(), &["kernel", "--config", cfg, "--out", "b"]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
}

#[test]
fn norms_of_a_constant_are_zero() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"{
        "grid": {"dim": 1, "n": 256, "h": 0.0625},
        "seed": 1,
        "datum": {"generator": "constant", "params": {"value": [2.0, -1.0]}},
        "operations": [{"op": "norms", "p": [1, 2], "etas": [0.5]}]
    }"#;
    let cfg = write(dir.path(), "n.json", text);
    let o = hsbmo(dir.path(), &["norms", "--config", cfg.to_str().unwrap(), "--out", "o"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = json(&dir.path().join("o/norms_report.json"));
    for (_, v) in r["bmo"].as_array().unwrap().iter().map(|p| (p[0].clone(), p[1].as_f64().unwrap())) {
        assert!(v.abs() < 1e-12, "bmo {v}");
    }
    assert!(r["carleson_norm"].as_f64().unwrap() < 1e-12);
    assert!(r["holder"][0][1].as_f64().unwrap() < 1e-12);
    assert!(r["carleson_over_bmo"].is_null());
    assert_eq!(r["vanishing_verdict"], "vanishing");
}

#[test]
fn csv_datum_is_accepted_and_checksummed() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("x1,re0,im0\n");
    for i in 0..64 {
        let x = -4.0 + 0.125 * i as f64;
        csv.push_str(&format!("{x},{},0\n", x.abs().sqrt()));
    }
    write(dir.path(), "f.csv", &csv);
    let text = r#"{"grid": {"dim": 1, "n": 64, "h": 0.125}, "datum": {"file": "f.csv"},
                   "operations": [{"op": "extend", "trace": true}]}"#;
    let cfg = write(dir.path(), "e.json", text);
    let o = hsbmo(dir.path(), &["extend", "--config", cfg.to_str().unwrap(), "--out", "o"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let m = json(&dir.path().join("o/extend.manifest.json"));
    assert_eq!(m["inputs"]["datum"], hsbmo::report::sha256_hex(csv.as_bytes()));
    let u = hsbmo::format::load_half_space(&dir.path().join("o/half_space.bin")).unwrap();
    assert!(u.has_gradient());
}

#[test]
fn verify_filter_runs_only_matching_criteria() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = verify_config(dir.path(), &root().join("calibration/calibration.json"));
    let o = hsbmo(dir.path(), &["verify", "--config", cfg.to_str().unwrap(), "--filter", "kernel", "--out", "o"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = json(&dir.path().join("o/verify_report.json"));
    let names: Vec<&str> = r["criteria"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    assert_eq!(names.len(), 5);
    assert!(names.iter().all(|n| n.contains("kernel")));
    assert!(std::fs::read_to_string(dir.path().join("o/verify_report.csv")).unwrap().starts_with("id,"));

    let o = hsbmo(dir.path(), &["verify", "--config", cfg.to_str().unwrap(), "--filter", "no_such", "--out", "o"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn verify_reports_a_failing_criterion_with_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = verify_config(dir.path(), &root().join("calibration/calibration.json"));
    let args = ["verify", "--config", cfg.to_str().unwrap(), "--filter", "holder_carleson", "--out", "o"];
    let o = hsbmo(dir.path(), &args);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
}

#[test]
fn corrupted_or_missing_calibration_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(root().join("calibration/calibration.json")).unwrap();
    let edited = text.replacen("1.25", "1.5", 1);
    assert_ne!(edited, text);
    let cal = write(dir.path(), "cal.json", &edited);
    let cfg = verify_config(dir.path(), &cal);
    let o = hsbmo(dir.path(), &["verify", "--config", cfg.to_str().unwrap(), "--filter", "kernel"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("hash mismatch"), "{}", stderr(&o));

    let cfg = verify_config(dir.path(), &dir.path().join("absent.json"));
    let o = hsbmo(dir.path(), &["verify", "--config", cfg.to_str().unwrap(), "--filter", "kernel"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("--calibrate"), "{}", stderr(&o));
}

#[test]
fn verify_requires_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "v.json", r#"{"grid": {"dim": 1, "n": 2048, "h": 0.0078125}}"#);
    let o = hsbmo(dir.path(), &["verify", "--config", cfg.to_str().unwrap(), "--filter", "kernel"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("seed"), "{}", stderr(&o));
}
