// SPDX-License-Identifier: MIT OR Apache-2.0

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

pub fn pcreg(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pcreg"))
        .args(args)
        .current_dir(dir)
        .env_remove("PCREG_SEED")
        .env_remove("PCREG_WORKERS")
        .output()
        .expect("pcreg runs")
}

pub fn pcreg_env(dir: &Path, args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_pcreg"));
    cmd.args(args)
        .current_dir(dir)
        .env_remove("PCREG_SEED")
        .env_remove("PCREG_WORKERS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("pcreg runs")
}

/// Runs and asserts exit status 0.
pub fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = pcreg(dir, args);
    assert_eq!(
        out.status.code(),
        Some(0),
        "pcreg {args:?} failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn schema_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("schemas")
        .join(format!("{name}.json"))
}

pub fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).expect("artifact exists"))
        .expect("valid JSON")
}

/// Panics with every violation when `doc` does not satisfy the schema.
pub fn validate(name: &str, doc: &Value) {
    let schema = read_json(&schema_path(name));
    let v = jsonschema::validator_for(&schema).expect("schema compiles");
    let errors: Vec<String> = v
        .iter_errors(doc)
        .map(|e| format!("{} at {}", e, e.instance_path))
        .collect();
    assert!(errors.is_empty(), "{name} schema violations: {errors:#?}");
}

pub fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

pub fn read_column(path: &Path, col: usize) -> Vec<f64> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter_map(|l| l.split(',').nth(col).and_then(|f| f.parse().ok()))
        .collect()
}
