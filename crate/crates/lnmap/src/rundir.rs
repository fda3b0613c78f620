//! Run directories: manifest, resolved config and iteration history.
//!
//! Every training run owns a directory holding `config.json` (the
//! resolved settings, reusable as a config file), `manifest.json` (tool
//! version, timestamps and input checksums), `history.jsonl` (one JSON
//! iteration record per line, free of wall-clock noise so identical runs
//! produce identical bytes) and the model files from [`crate::persist`].

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use lnmap_core::trainer::IterationStats;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ConfigPatch;
use crate::{persist, CliError, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const CONFIG_FILE: &str = "config.json";
pub const HISTORY_FILE: &str = "history.jsonl";

/// Current manifest schema.
pub const MANIFEST_SCHEMA: u32 = 1;

/// Checksummed record of one input file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputRecord {
    /// What the file was used as: `src-emb`, `tgt-emb`, `dict`, ...
    pub role: String,
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Everything needed to audit or re-run a training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool: String,
    pub version: String,
    /// Unix seconds at run start; excluded from determinism comparisons.
    pub created_unix: u64,
    pub seed: u64,
    /// The fully resolved settings, same shape as `config.json`.
    pub config: ConfigPatch,
    pub inputs: Vec<InputRecord>,
}

impl RunManifest {
    /// Builds a manifest for a run starting now.
    pub fn new(config: ConfigPatch, seed: u64, inputs: Vec<InputRecord>) -> RunManifest {
        let created_unix = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        RunManifest {
            schema_version: MANIFEST_SCHEMA,
            tool: "lnmap".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            created_unix,
            seed,
            config,
            inputs,
        }
    }
}

/// Hex SHA-256 and byte count of a file, streamed.
pub fn sha256_file(path: &Path) -> Result<(String, u64)> {
    let file = File::open(path).map_err(|e| CliError::file(path, e))?;
    let mut reader = BufReader::new(file);
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    let mut bytes = 0u64;
    loop {
        let n = reader.read(&mut buf).map_err(|e| CliError::file(path, e))?;
        if n == 0 {
            break;
        }
        bytes += n as u64;
        hasher.update(&buf[..n]);
    }
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for b in digest {
        hex.push_str(&format!("{b:02x}"));
    }
    Ok((hex, bytes))
}

/// Checksums one input file under its role name.
pub fn input_record(role: &str, path: &Path) -> Result<InputRecord> {
    let (sha256, bytes) = sha256_file(path)?;
    Ok(InputRecord {
        role: role.to_string(),
        path: path.display().to_string(),
        sha256,
        bytes,
    })
}

/// Creates the run directory (and parents) if needed.
pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::file(dir, e))
}

/// Writes `manifest.json` and the reusable `config.json` into `dir`.
pub fn write_manifest(dir: &Path, manifest: &RunManifest) -> Result<()> {
    persist::write_json(&dir.join(MANIFEST_FILE), manifest)?;
    persist::write_json(&dir.join(CONFIG_FILE), &manifest.config)
}

/// Reads a run directory's manifest back.
pub fn read_manifest(dir: &Path) -> Result<RunManifest> {
    persist::read_json(&dir.join(MANIFEST_FILE))
}

/// Append-only writer for `history.jsonl`.
pub struct HistoryWriter {
    path: PathBuf,
    file: File,
}

impl HistoryWriter {
    /// Starts a fresh history file, truncating any previous one.
    pub fn create(dir: &Path) -> Result<HistoryWriter> {
        let path = dir.join(HISTORY_FILE);
        let file = File::create(&path).map_err(|e| CliError::file(&path, e))?;
        Ok(HistoryWriter { path, file })
    }

    /// Reopens an existing history file for appending (resumed runs).
    pub fn append(dir: &Path) -> Result<HistoryWriter> {
        let path = dir.join(HISTORY_FILE);
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| CliError::file(&path, e))?;
        Ok(HistoryWriter { path, file })
    }

    /// Appends one iteration record as a single JSON line and flushes, so
    /// an interrupted run keeps every completed iteration.
    pub fn push(&mut self, stats: &IterationStats) -> Result<()> {
        let line = serde_json::to_string(stats)
            .map_err(|e| CliError::Internal(format!("serializing history: {e}")))?;
        writeln!(self.file, "{line}").map_err(|e| CliError::file(&self.path, e))?;
        self.file.flush().map_err(|e| CliError::file(&self.path, e))
    }
}

/// Reads a `history.jsonl` back into iteration records.
pub fn read_history(dir: &Path) -> Result<Vec<IterationStats>> {
    let path = dir.join(HISTORY_FILE);
    let file = File::open(&path).map_err(|e| CliError::file(&path, e))?;
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CliError::file(&path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let stats: IterationStats = serde_json::from_str(&line)
            .map_err(|e| CliError::Input(format!("{}:{}: {e}", path.display(), idx + 1)))?;
        out.push(stats);
    }
    Ok(out)
}
