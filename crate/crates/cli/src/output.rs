//! Artifact formatting and writing. Every run ends with a manifest that
//! echoes the resolved config and the checksums of the artifacts.

use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliError;

/// 17 significant digits, enough to round-trip any `f64`.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

/// A file to be written next to the output prefix.
#[derive(Debug, Clone)]
pub struct Artifact {
    /// Suffix appended to the output prefix, e.g. `.csv`.
    pub suffix: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Self, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).map_err(|e| CliError::csv(Path::new("<csv>"), e))?;
        for row in rows {
            w.write_record(&row).map_err(|e| CliError::csv(Path::new("<csv>"), e))?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| CliError::Config(format!("csv buffer: {e}")))?;
        Ok(Self {
            suffix: ".csv".into(),
            bytes,
        })
    }

    pub fn json(value: &impl Serialize) -> Result<Self, CliError> {
        Self::json_with_suffix(".json", value)
    }

    pub fn json_with_suffix(suffix: &str, value: &impl Serialize) -> Result<Self, CliError> {
        let mut bytes =
            serde_json::to_vec_pretty(value).map_err(|e| CliError::Config(format!("json encoding: {e}")))?;
        bytes.push(b'\n');
        Ok(Self {
            suffix: suffix.into(),
            bytes,
        })
    }
}

#[derive(Serialize)]
struct ManifestEntry {
    file: String,
    sha256: String,
    bytes: usize,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    config: &'a RunConfig,
    artifacts: Vec<ManifestEntry>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut name = prefix.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}

/// Writes the artifacts and then the manifest; returns the written paths in
/// order, manifest last.
pub fn write_all(prefix: &Path, config: &RunConfig, artifacts: &[Artifact]) -> Result<Vec<PathBuf>, CliError> {
    if let Some(dir) = prefix.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let mut written = Vec::with_capacity(artifacts.len() + 1);
    let mut entries = Vec::with_capacity(artifacts.len());
    for a in artifacts {
        let path = with_suffix(prefix, &a.suffix);
        std::fs::write(&path, &a.bytes).map_err(|e| CliError::io(&path, e))?;
        entries.push(ManifestEntry {
            file: path
                .file_name()
                .map(|f| f.to_string_lossy().into_owned())
                .unwrap_or_default(),
            sha256: sha256_hex(&a.bytes),
            bytes: a.bytes.len(),
        });
        written.push(path);
    }
    let manifest = Artifact::json_with_suffix(
        ".manifest.json",
        &Manifest {
            tool: "qtrap",
            version: env!("CARGO_PKG_VERSION"),
            config,
            artifacts: entries,
        },
    )?;
    let path = with_suffix(prefix, &manifest.suffix);
    std::fs::write(&path, &manifest.bytes).map_err(|e| CliError::io(&path, e))?;
    written.push(path);
    Ok(written)
}
