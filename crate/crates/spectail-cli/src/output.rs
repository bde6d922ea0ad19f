//! Run outputs with a fixed layout and canonical bytes.
//!
//! Every run directory holds `manifest.json` (run metadata and checksums),
//! `records.jsonl` (one JSON object per result record, sorted by the stable
//! key `(n, delta, method, block)`), and `summary.csv` (plot-ready rows).
//! Record content never depends on the worker-thread schedule and the sort
//! fixes the order, so reruns with the same seed produce byte-identical
//! records and summaries at any thread count; only the manifest timestamps
//! differ.

use crate::CliError;
use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

/// One result record; `fields` holds the subcommand-specific payload.
pub struct Record {
    pub n: u64,
    pub delta: f64,
    pub method: String,
    pub block: u64,
    pub fields: Map<String, Value>,
}

impl Record {
    pub fn new(n: u64, delta: f64, method: &str, block: u64) -> Self {
        Record {
            n,
            delta,
            method: method.to_string(),
            block,
            fields: Map::new(),
        }
    }

    pub fn set(&mut self, key: &str, value: Value) {
        self.fields.insert(key.to_string(), value);
    }

    fn to_line(&self) -> String {
        let mut map = self.fields.clone();
        map.insert("n".into(), Value::from(self.n));
        map.insert("delta".into(), Value::from(self.delta));
        map.insert("method".into(), Value::from(self.method.clone()));
        map.insert("block".into(), Value::from(self.block));
        Value::Object(map).to_string()
    }
}

/// Run metadata written as `manifest.json`. The checksums cover every other
/// file in the directory, so a reader can verify the payload without
/// rerunning; the timestamps are the only fields exempt from the
/// reproducibility contract.
#[derive(Serialize)]
pub struct RunManifest {
    pub command_line: Vec<String>,
    pub subcommand: String,
    pub resolved_config: BTreeMap<String, String>,
    pub master_seed: u64,
    pub code_version: String,
    pub started_unix_ms: u64,
    pub finished_unix_ms: u64,
    pub child_seeds: Vec<u64>,
    pub output_checksums: BTreeMap<String, String>,
}

pub fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Output directory accumulating files and their checksums.
pub struct OutDir {
    dir: PathBuf,
    checksums: BTreeMap<String, String>,
}

impl OutDir {
    pub fn create(dir: PathBuf) -> Result<Self, CliError> {
        fs::create_dir_all(&dir)
            .map_err(|e| CliError::usage(format!("cannot create {}: {e}", dir.display())))?;
        Ok(OutDir {
            dir,
            checksums: BTreeMap::new(),
        })
    }

    pub fn write_file(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, contents)
            .map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))?;
        self.checksums
            .insert(name.to_string(), sha256_hex(contents.as_bytes()));
        Ok(())
    }

    /// Sorts by the canonical key and writes one JSON object per line.
    pub fn write_records(&mut self, mut records: Vec<Record>) -> Result<(), CliError> {
        records.sort_by(|a, b| {
            a.n.cmp(&b.n)
                .then(a.delta.total_cmp(&b.delta))
                .then(a.method.cmp(&b.method))
                .then(a.block.cmp(&b.block))
        });
        let mut text = String::new();
        for record in &records {
            text.push_str(&record.to_line());
            text.push('\n');
        }
        self.write_file("records.jsonl", &text)
    }

    /// Writes a CSV with the given header; empty rows produce a header-only
    /// file. Cells are plain numbers and identifiers, so no quoting.
    pub fn write_csv(
        &mut self,
        name: &str,
        header: &str,
        rows: &[Vec<String>],
    ) -> Result<(), CliError> {
        let mut text = String::with_capacity(64 * (rows.len() + 1));
        text.push_str(header);
        text.push('\n');
        for row in rows {
            text.push_str(&row.join(","));
            text.push('\n');
        }
        self.write_file(name, &text)
    }

    /// Writes `manifest.json` last so it can carry the other checksums.
    pub fn finish(self, manifest: RunManifest) -> Result<(), CliError> {
        let mut manifest = manifest;
        manifest.output_checksums = self.checksums.clone();
        manifest.finished_unix_ms = now_ms();
        let text = serde_json::to_string_pretty(&manifest)
            .map_err(|e| CliError::usage(format!("manifest serialization failed: {e}")))?;
        let path = self.dir.join("manifest.json");
        fs::write(&path, text)
            .map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))?;
        Ok(())
    }
}
