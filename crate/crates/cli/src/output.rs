//! Output directory bookkeeping: every file goes through `Outputs` so the
//! manifest can list it with its hash.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
struct FileEntry {
    path: String,
    bytes: usize,
    sha256: String,
}

pub struct Outputs {
    dir: PathBuf,
    files: Vec<FileEntry>,
    timings: BTreeMap<String, f64>,
    summary: BTreeMap<String, Value>,
    started: Instant,
}

impl Outputs {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            timings: BTreeMap::new(),
            summary: BTreeMap::new(),
            started: Instant::now(),
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.files.push(FileEntry {
            path: name.to_string(),
            bytes: bytes.len(),
            sha256: hex(&Sha256::digest(bytes)),
        });
        Ok(path)
    }

    /// Serializes `rows` as RFC 4180 CSV under `header`.
    pub fn write_csv<R: AsRef<[String]>>(&mut self, name: &str, header: &[&str], rows: &[R]) -> Result<PathBuf> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for r in rows {
            w.write_record(r.as_ref())?;
        }
        let bytes = w.into_inner().context("flushing CSV")?;
        self.write(name, &bytes)
    }

    pub fn time(&mut self, label: &str, since: Instant) {
        self.seconds(label, since.elapsed().as_secs_f64());
    }

    pub fn seconds(&mut self, label: &str, secs: f64) {
        self.timings.insert(label.to_string(), secs);
    }

    pub fn note(&mut self, key: &str, value: impl Serialize) {
        self.summary.insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
    }

    /// Writes `manifest.json` listing every file written so far.
    pub fn finish(mut self, command: &str, config: &impl Serialize) -> Result<()> {
        self.timings.insert("total".into(), self.started.elapsed().as_secs_f64());
        let manifest = serde_json::json!({
            "command": command,
            "version": env!("CARGO_PKG_VERSION"),
            "config": config,
            "summary": self.summary,
            "timings_s": self.timings,
            "files": self.files,
        });
        let text = serde_json::to_string_pretty(&manifest)?;
        let path = self.dir.join("manifest.json");
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Shortest round-trip formatting, so identical runs give identical bytes.
pub fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        String::new()
    }
}
