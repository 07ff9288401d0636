//! Deterministic JSON and CSV emission, and the per-run manifest.
//!
//! Reports carry no timestamps or timings, so a rerun with the same
//! configuration and seed reproduces them byte for byte.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_sha256(path: &Path) -> CliResult<String> {
    Ok(sha256_hex(&std::fs::read(path).map_err(|e| CliError::io(path, e))?))
}

/// Pretty JSON with a trailing newline.
pub fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("report serializes");
    out.push(b'\n');
    out
}

/// A table of named columns written as CSV with `{:e}` floats.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn push_numbers(&mut self, row: &[f64]) {
        self.push(row.iter().map(|v| num(*v)).collect());
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory csv");
        for r in &self.rows {
            w.write_record(r).expect("in-memory csv");
        }
        w.into_inner().expect("in-memory csv")
    }
}

pub fn num(v: f64) -> String {
    format!("{v:e}")
}

/// Collects outputs of one command and writes them with a manifest.
#[derive(Debug)]
pub struct OutputSet {
    dir: PathBuf,
    command: &'static str,
    outputs: BTreeMap<String, String>,
    inputs: BTreeMap<String, String>,
    context: BTreeMap<String, serde_json::Value>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    config_hash: &'a str,
    calibration_hash: Option<&'a str>,
    context: &'a BTreeMap<String, serde_json::Value>,
    inputs: &'a BTreeMap<String, String>,
    outputs: &'a BTreeMap<String, String>,
}

impl OutputSet {
    pub fn new(dir: &Path, command: &'static str) -> CliResult<Self> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(OutputSet {
            dir: dir.to_path_buf(),
            command,
            outputs: BTreeMap::new(),
            inputs: BTreeMap::new(),
            context: BTreeMap::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Records an input file by checksum.
    pub fn input(&mut self, label: &str, path: &Path) -> CliResult<()> {
        self.inputs.insert(label.to_string(), file_sha256(path)?);
        Ok(())
    }

    pub fn input_digest(&mut self, label: &str, digest: String) {
        self.inputs.insert(label.to_string(), digest);
    }

    /// Adds a run descriptor (system, grid, levels, aperture, …).
    pub fn describe(&mut self, key: &str, value: impl Serialize) {
        self.context
            .insert(key.to_string(), serde_json::to_value(value).expect("descriptor serializes"));
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> CliResult<()> {
        let path = self.path(name);
        std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.outputs.insert(name.to_string(), sha256_hex(bytes));
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        self.write_bytes(name, &json_bytes(value))
    }

    pub fn write_table(&mut self, name: &str, table: &Table) -> CliResult<()> {
        self.write_bytes(name, &table.to_bytes())
    }

    /// Registers a file written elsewhere under this directory.
    pub fn register(&mut self, name: &str) -> CliResult<()> {
        let digest = file_sha256(&self.path(name))?;
        self.outputs.insert(name.to_string(), digest);
        Ok(())
    }

    pub fn finish(self, config: &RunConfig, calibration_hash: Option<&str>) -> CliResult<PathBuf> {
        let hash = config.hash();
        let manifest = Manifest {
            command: self.command,
            config_hash: &hash,
            calibration_hash,
            context: &self.context,
            inputs: &self.inputs,
            outputs: &self.outputs,
        };
        let path = self.dir.join(format!("{}.manifest.json", self.command));
        std::fs::write(&path, json_bytes(&manifest)).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}
