//! Append-only run journal (`journal.jsonl` in the output directory).

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::output::{digest, to_line};
use crate::error::{LabError, Result};

pub const JOURNAL_FILE: &str = "journal.jsonl";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputDigest {
    /// Path relative to the output directory.
    pub path: String,
    pub digest: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JournalEntry {
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub config_hash: String,
    pub command: String,
    pub input_digest: String,
    pub outputs: Vec<OutputDigest>,
    pub version: String,
}

impl JournalEntry {
    pub fn new(config_hash: &str, command: &str, input_digest: &str, outputs: Vec<OutputDigest>) -> Self {
        JournalEntry {
            timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
            config_hash: config_hash.to_string(),
            command: command.to_string(),
            input_digest: input_digest.to_string(),
            outputs,
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

pub fn append(out_dir: &Path, entry: &JournalEntry) -> Result<()> {
    fs::create_dir_all(out_dir)?;
    let mut f = OpenOptions::new().create(true).append(true).open(out_dir.join(JOURNAL_FILE))?;
    writeln!(f, "{}", to_line(entry)?)?;
    Ok(())
}

pub fn read(out_dir: &Path) -> Result<Vec<JournalEntry>> {
    let path = out_dir.join(JOURNAL_FILE);
    let text = fs::read_to_string(&path)
        .map_err(|_| LabError::MissingDependency(format!("{} not found", path.display())))?;
    text.lines()
        .enumerate()
        .map(|(i, line)| {
            serde_json::from_str(line).map_err(|e| LabError::Parse(format!("{} line {}: {e}", path.display(), i + 1)))
        })
        .collect()
}

/// Re-hashes every output named by the latest entry of each path and
/// returns the paths whose digest no longer matches.
pub fn verify(out_dir: &Path) -> Result<Vec<String>> {
    let mut latest = std::collections::BTreeMap::new();
    for entry in read(out_dir)? {
        for o in entry.outputs {
            latest.insert(o.path, o.digest);
        }
    }
    let mut bad = Vec::new();
    for (path, want) in latest {
        match fs::read(out_dir.join(&path)) {
            Ok(bytes) if digest(&bytes) == want => {}
            _ => bad.push(path),
        }
    }
    Ok(bad)
}
