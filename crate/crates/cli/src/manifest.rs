//! Output directories with atomic writes and a run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_FORMAT: &str = "mbid-run-manifest";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

impl FileDigest {
    pub fn of_bytes(path: String, bytes: &[u8]) -> Self {
        Self {
            path,
            sha256: hex::encode(Sha256::digest(bytes)),
            bytes: bytes.len() as u64,
        }
    }

    pub fn of_file(path: &Path) -> Result<Self, CliError> {
        let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
        Ok(Self::of_bytes(path.display().to_string(), &bytes))
    }
}

/// What produced an output directory and from what.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format: String,
    pub subcommand: String,
    pub versions: BTreeMap<String, String>,
    pub seed: Option<u64>,
    /// Effective settings after flag overrides.
    pub config: serde_json::Value,
    pub inputs: Vec<FileDigest>,
    /// Paths relative to the output directory, sorted.
    pub outputs: Vec<FileDigest>,
    /// Seconds since the Unix epoch; `SOURCE_DATE_EPOCH` when set.
    pub started_at: u64,
    pub finished_at: u64,
}

/// Wall-clock seconds, or `SOURCE_DATE_EPOCH` for reproducible builds.
pub fn timestamp() -> u64 {
    if let Some(epoch) = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|v| v.parse().ok()) {
        return epoch;
    }
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

/// Writes `bytes` to `path` through a sibling temporary file and a rename,
/// so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    result.map_err(|e| {
        let _ = fs::remove_file(&tmp);
        CliError::io(path, e)
    })
}

/// An output directory being filled by one subcommand.
pub struct OutputDir {
    dir: PathBuf,
    subcommand: String,
    started_at: u64,
    outputs: Vec<FileDigest>,
}

impl OutputDir {
    pub fn create(dir: &Path, subcommand: &str) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            subcommand: subcommand.to_string(),
            started_at: timestamp(),
            outputs: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        write_atomic(&self.dir.join(name), bytes)?;
        self.outputs.retain(|d| d.path != name);
        self.outputs.push(FileDigest::of_bytes(name.to_string(), bytes));
        Ok(())
    }

    pub fn write_str(&mut self, name: &str, text: &str) -> Result<(), CliError> {
        self.write(name, text.as_bytes())
    }

    /// Records a file written by someone else, e.g. a sub-stage manifest.
    pub fn record(&mut self, name: &str) -> Result<(), CliError> {
        let bytes = fs::read(self.dir.join(name)).map_err(|e| CliError::io(&self.dir.join(name), e))?;
        self.outputs.retain(|d| d.path != name);
        self.outputs.push(FileDigest::of_bytes(name.to_string(), &bytes));
        Ok(())
    }

    pub fn finish(
        mut self,
        seed: Option<u64>,
        config: serde_json::Value,
        inputs: Vec<FileDigest>,
    ) -> Result<RunManifest, CliError> {
        self.outputs.sort_by(|a, b| a.path.cmp(&b.path));
        let manifest = RunManifest {
            format: MANIFEST_FORMAT.to_string(),
            subcommand: self.subcommand,
            versions: [
                ("mbid-cli".to_string(), env!("CARGO_PKG_VERSION").to_string()),
                ("mbid-core".to_string(), mbid_core::VERSION.to_string()),
            ]
            .into(),
            seed,
            config,
            inputs,
            outputs: self.outputs,
            started_at: self.started_at,
            finished_at: timestamp(),
        };
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        write_atomic(&self.dir.join(MANIFEST_FILE), text.as_bytes())?;
        Ok(manifest)
    }
}

#[cfg(test)]
pub fn read_manifest(dir: &Path) -> Result<RunManifest, CliError> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::new(crate::error::Class::Data, "Manifest", e))
}
