//! Frozen constants of the acceptance suite, keyed by
//! `d{dim}/{subject}/{statistic}`, with a content hash that guards against
//! hand edits.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::report::{json_bytes, sha256_hex};

pub const FORMAT: &str = "hsbmo-calibration/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CalibrationFile {
    format: String,
    margin: f64,
    entries: BTreeMap<String, [f64; 2]>,
    sha256: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Calibration {
    pub margin: f64,
    pub entries: BTreeMap<String, [f64; 2]>,
}

pub fn key(dim: usize, subject: &str, statistic: &str) -> String {
    format!("d{dim}/{subject}/{statistic}")
}

impl Calibration {
    pub fn new(margin: f64) -> Self {
        Calibration {
            margin,
            entries: BTreeMap::new(),
        }
    }

    /// Hash over the format tag, margin and entries.
    pub fn hash(&self) -> String {
        let body = serde_json::to_vec(&(FORMAT, self.margin, &self.entries)).expect("entries serialize");
        sha256_hex(&body)
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let file: CalibrationFile = serde_json::from_str(text).map_err(|e| {
            CliError::Config(format!("calibration line {} column {}: {e}", e.line(), e.column()))
        })?;
        if file.format != FORMAT {
            return Err(CliError::Config(format!("calibration format `{}`, expected `{FORMAT}`", file.format)));
        }
        let cal = Calibration {
            margin: file.margin,
            entries: file.entries,
        };
        let actual = cal.hash();
        if actual != file.sha256 {
            return Err(CliError::Config(format!(
                "calibration hash mismatch: file records {}, content hashes to {actual}",
                file.sha256
            )));
        }
        if let Some((k, b)) = cal.entries.iter().find(|(_, b)| !(b[0] <= b[1] && b[0].is_finite() && b[1].is_finite())) {
            return Err(CliError::Config(format!("calibration entry `{k}` has an invalid band {b:?}")));
        }
        Ok(cal)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text).map_err(|e| e.context(&path.display().to_string()))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        json_bytes(&CalibrationFile {
            format: FORMAT.into(),
            margin: self.margin,
            entries: self.entries.clone(),
            sha256: self.hash(),
        })
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
        std::fs::write(path, self.to_bytes()).map_err(|e| CliError::io(path, e))
    }

    pub fn band(&self, key: &str) -> CliResult<[f64; 2]> {
        self.entries
            .get(key)
            .copied()
            .ok_or_else(|| CliError::Config(format!("calibration has no entry `{key}`; rerun with --calibrate")))
    }

    /// Upper bound of a one-sided constant.
    pub fn bound(&self, key: &str) -> CliResult<f64> {
        Ok(self.band(key)?[1])
    }

    /// Replaces every entry of dimension `dim` with `fresh`.
    pub fn merge_dimension(&mut self, dim: usize, fresh: BTreeMap<String, [f64; 2]>) {
        let prefix = format!("d{dim}/");
        self.entries.retain(|k, _| !k.starts_with(&prefix));
        self.entries.extend(fresh);
    }
}

/// Observed extremes of a statistic, turned into a band by the margin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Observed {
    pub min: f64,
    pub max: f64,
}

impl Observed {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Option<Self> {
        values.into_iter().fold(None, |acc, v| {
            Some(match acc {
                None => Observed { min: v, max: v },
                Some(o) => Observed {
                    min: o.min.min(v),
                    max: o.max.max(v),
                },
            })
        })
    }

    /// `[1/C*, C*]` with `C* = margin · max(max, 1/min)`.
    pub fn symmetric(&self, margin: f64) -> [f64; 2] {
        let c = margin * self.max.max(1.0 / self.min);
        [1.0 / c, c]
    }

    /// `[0, margin · max]`.
    pub fn upper(&self, margin: f64) -> [f64; 2] {
        [0.0, margin * self.max]
    }
}
