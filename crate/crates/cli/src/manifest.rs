//! Run manifests: what was run, on which inputs, producing which outputs.

use std::collections::BTreeMap;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::time::Instant;

use fuse_core::{EffectiveParams, FuseConfig, ProbeConfig};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Serialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub bytes: u64,
    pub sha256: String,
}

impl FileDigest {
    pub fn of(path: &Path) -> Result<Self> {
        let mut file = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
        let mut hasher = Sha256::new();
        let mut buf = vec![0u8; 1 << 16];
        let mut bytes = 0u64;
        loop {
            let read = file.read(&mut buf).map_err(|e| CliError::io(path, e))?;
            if read == 0 {
                break;
            }
            hasher.update(&buf[..read]);
            bytes += read as u64;
        }
        let sha256 = hasher.finalize().iter().map(|b| format!("{b:02x}")).collect();
        Ok(FileDigest {
            path: path.to_path_buf(),
            bytes,
            sha256,
        })
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ConfigSnapshot {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fuse: Option<FuseConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub effective: Option<EffectiveParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probe: Option<ProbeConfig>,
    /// Command-specific settings not covered above.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub other: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PhaseTiming {
    pub phase: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config: ConfigSnapshot,
    pub seeds: BTreeMap<String, u64>,
    pub threads: usize,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub timings: Vec<PhaseTiming>,
    pub summary: serde_json::Value,
}

impl RunManifest {
    pub fn new(command: &str, threads: usize) -> Self {
        RunManifest {
            tool: "fuse",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            config: ConfigSnapshot::default(),
            seeds: BTreeMap::new(),
            threads,
            inputs: Vec::new(),
            outputs: Vec::new(),
            timings: Vec::new(),
            summary: serde_json::Value::Null,
        }
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        self.inputs.push(FileDigest::of(path)?);
        Ok(())
    }

    /// Records an output after checking that it exists and is non-empty.
    pub fn output(&mut self, path: &Path) -> Result<()> {
        let digest = FileDigest::of(path)?;
        if digest.bytes == 0 {
            return Err(CliError::Output {
                path: path.to_path_buf(),
                message: "file is empty".into(),
            });
        }
        self.outputs.push(digest);
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let body = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(path, body + "\n").map_err(|e| CliError::io(path, e))
    }
}

/// Wall-clock timings for named phases, in call order.
#[derive(Debug, Default)]
pub struct Phases(Vec<PhaseTiming>);

impl Phases {
    pub fn time<T>(&mut self, phase: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.0.push(PhaseTiming {
            phase: phase.to_string(),
            seconds: start.elapsed().as_secs_f64(),
        });
        out
    }

    pub fn into_vec(self) -> Vec<PhaseTiming> {
        self.0
    }
}

/// `prefix` with `suffix` appended to its final component.
pub fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

pub fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(parent) if !parent.as_os_str().is_empty() => {
            fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))
        }
        _ => Ok(()),
    }
}
