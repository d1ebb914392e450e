pub mod bench;
pub mod diagnose;
pub mod embed;
pub mod eval;
pub mod pairs;

use std::path::{Path, PathBuf};

use crate::error::{CliError, Result};

pub(crate) fn require<T>(value: Option<T>, flag: &str) -> Result<T> {
    value.ok_or_else(|| CliError::missing(flag))
}

pub(crate) fn unit_interval(value: f64, flag: &str) -> Result<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(CliError::Usage(format!("--{flag} must lie in [0, 1], got {value}")))
    }
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub(crate) fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let body = serde_json::to_string_pretty(value).expect("report serializes");
    write_text(path, &(body + "\n"))
}

pub(crate) fn display(path: &Path) -> String {
    PathBuf::from(path).display().to_string()
}
