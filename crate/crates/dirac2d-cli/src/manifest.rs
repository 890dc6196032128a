//! The run manifest: one JSON file per run echoing the resolved config,
//! artifact version, status, and produced files.  Written on every path,
//! including schema and runtime failures, and contains nothing volatile,
//! so a rerun of the same config is byte-identical.

use std::path::Path;

use serde::Serialize;

use crate::config::ResolvedConfig;

#[derive(Debug, Serialize)]
pub struct ArtifactStamp {
    pub name: &'static str,
    pub version: &'static str,
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub artifact: ArtifactStamp,
    pub command: &'a str,
    /// "ok", "warning", or "error"
    pub status: &'a str,
    pub error: Option<String>,
    pub warnings: &'a [String],
    /// file names produced in the output directory, manifest excluded
    pub outputs: &'a [String],
    pub config: Option<&'a ResolvedConfig>,
    /// the config file the run was invoked with, if any
    pub config_file: Option<String>,
}

pub const MANIFEST_NAME: &str = "manifest.json";

/// Serializes the manifest into `dir/manifest.json`, creating the
/// directory if needed.  Failures here are reported to stderr rather than
/// returned: the manifest must never mask the run's own error.
pub fn write(dir: &Path, manifest: &Manifest<'_>) {
    if let Err(e) = std::fs::create_dir_all(dir) {
        eprintln!("manifest: cannot create {}: {e}", dir.display());
        return;
    }
    let path = dir.join(MANIFEST_NAME);
    let body = match serde_json::to_string_pretty(manifest) {
        Ok(mut s) => {
            s.push('\n');
            s
        }
        Err(e) => {
            eprintln!("manifest: serialization failed: {e}");
            return;
        }
    };
    if let Err(e) = std::fs::write(&path, body) {
        eprintln!("manifest: cannot write {}: {e}", path.display());
    }
}
