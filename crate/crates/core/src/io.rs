//! Artifact files: JSON envelopes with a provenance block, and CSV exports.
//!
//! Every file written here has the shape
//! `{"format": ..., "provenance": {...}, "metadata": {...}, "data": ...}`.
//! The provenance block records the tool version, the command and the full resolved configuration.
//! No timestamps or host names are recorded, so identical runs give identical bytes.
//!
//! Readers accept either an envelope or the bare `data` object.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{IstError, Result};

pub const TOOL: &str = "nonlocal-ist";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Resolved key/value configuration, sorted by key.
    pub config: BTreeMap<String, String>,
}

impl Provenance {
    pub fn new(command: &str, config: BTreeMap<String, String>) -> Self {
        Self {
            tool: TOOL.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact<T> {
    pub format: String,
    pub provenance: Provenance,
    #[serde(default)]
    pub metadata: BTreeMap<String, Value>,
    pub data: T,
}

impl<T> Artifact<T> {
    pub fn new(format: &str, provenance: Provenance, data: T) -> Self {
        Self {
            format: format.to_string(),
            provenance,
            metadata: BTreeMap::new(),
            data,
        }
    }

    pub fn with_metadata(mut self, key: &str, value: Value) -> Self {
        self.metadata.insert(key.to_string(), value);
        self
    }
}

fn with_path(path: &Path, e: std::io::Error) -> IstError {
    IstError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    let path = path.as_ref();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| with_path(dir, e))?;
    }
    fs::write(path, text).map_err(|e| with_path(path, e))
}

pub fn write_artifact<T: Serialize>(path: impl AsRef<Path>, artifact: &Artifact<T>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(artifact)?;
    text.push('\n');
    write_text(path, &text)
}

/// Parse a file as an envelope, falling back to the bare payload.
pub fn read_artifact<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<(Option<Provenance>, T)> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| with_path(path, e))?;
    let value: Value = serde_json::from_str(&text)?;
    let wrapped = value.get("data").is_some() && value.get("provenance").is_some();
    if wrapped {
        let artifact: Artifact<T> = serde_json::from_value(value)?;
        Ok((Some(artifact.provenance), artifact.data))
    } else {
        Ok((None, serde_json::from_value(value)?))
    }
}

pub fn read_data<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    Ok(read_artifact(path)?.1)
}

/// `# key = value` comment lines that prefix CSV exports.
pub fn csv_provenance(provenance: &Provenance) -> String {
    let mut out = format!("# {} {} {}\n", provenance.tool, provenance.version, provenance.command);
    for (k, v) in &provenance.config {
        out.push_str(&format!("# {k} = {v}\n"));
    }
    out
}
