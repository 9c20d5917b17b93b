//! CSV and JSON emission.
//!
//! Numbers are written as `{:.16e}` (17 significant digits), which parses back
//! to the identical `f64`. Lines end in `\n` only.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Map, Value};

use super::CliError;
use crate::fidelity::FidelityFlags;
use crate::scan::hex_digest;

pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64())
}

/// Builds a CSV document: `#` comment lines followed by data rows.
#[derive(Debug, Default)]
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn comment(&mut self, line: impl AsRef<str>) -> &mut Self {
        let _ = writeln!(self.text, "# {}", line.as_ref());
        self
    }

    pub fn row<I, S>(&mut self, cells: I) -> &mut Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut first = true;
        for c in cells {
            if !first {
                self.text.push(',');
            }
            self.text.push_str(c.as_ref());
            first = false;
        }
        self.text.push('\n');
        self
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.text.into_bytes()
    }
}

/// Collects written files and their digests for the manifest.
#[derive(Debug)]
pub struct OutputSet {
    dir: PathBuf,
    files: Vec<Value>,
}

impl OutputSet {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(OutputSet {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.files.push(json!({
            "file": name,
            "bytes": bytes.len(),
            "sha256": hex_digest(bytes),
        }));
        Ok(())
    }

    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

pub struct ManifestInfo<'a> {
    pub command: &'a str,
    pub config: Map<String, Value>,
    pub model: Value,
    pub started: f64,
    pub flags: Option<(FidelityFlags, usize)>,
    pub extra: Map<String, Value>,
}

/// Writes `manifest.json` listing every file written so far.
pub fn write_manifest(outputs: &OutputSet, info: ManifestInfo) -> Result<(), CliError> {
    let finished = unix_now();
    let mut warnings = Vec::new();
    let flags = info.flags.map(|(f, cells)| {
        if f.exceptional_point {
            warnings.push(format!("{cells} cells met an exceptional point; their factors were set to 0"));
        }
        if f.real_part_tie {
            warnings.push("real-part ties were broken by the imaginary part".to_string());
        }
        json!({
            "real_part_tie": f.real_part_tie,
            "exceptional_point": f.exceptional_point,
            "lenient": f.lenient,
            "flagged_cells": cells,
        })
    });
    let mut manifest = json!({
        "v": 1,
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "command": info.command,
        "config": info.config,
        "model": info.model,
        "started_unix": info.started,
        "finished_unix": finished,
        "outputs": outputs.files,
        "flags": flags,
        "warnings": warnings,
    });
    if let Value::Object(m) = &mut manifest {
        m.extend(info.extra);
    }
    let mut bytes = serde_json::to_vec_pretty(&manifest).map_err(|e| CliError::Io(e.to_string()))?;
    bytes.push(b'\n');
    let path = outputs.dir.join("manifest.json");
    fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))
}
