use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::args::Command;
use crate::CliError;

pub fn write_csv<T: Serialize>(dir: &Path, name: &str, rows: &[T]) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    let mut w = csv::Writer::from_path(&path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(path)
}

#[derive(Serialize)]
struct Sidecar<'a, R: Serialize> {
    tool: &'static str,
    version: &'static str,
    seed: u64,
    copies: u64,
    config: &'a Command,
    results: R,
}

/// JSON report next to the CSV tables. Carries no timestamps or paths so
/// reruns are byte-identical.
pub fn write_json<R: Serialize>(dir: &Path, name: &str, config: &Command, seed: u64, copies: u64, results: R) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    let side = Sidecar {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        seed,
        copies,
        config,
        results,
    };
    let mut text = serde_json::to_string_pretty(&side).map_err(|e| CliError::config(format!("json: {e}")))?;
    text.push('\n');
    std::fs::write(&path, text)?;
    Ok(path)
}
