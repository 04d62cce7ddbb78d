//! Persisted outputs: CSV tables and the JSON run record with a content hash.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;

/// Decimal text with 17 significant digits, enough to round-trip any f64.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: vec![],
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.iter().map(|v| fmt_num(*v)).collect::<Vec<_>>().join(","));
            s.push('\n');
        }
        s
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(format!("{}.csv", self.name)), self.to_csv())?;
        Ok(())
    }
}

/// Drops every `wall_time` entry so that timing noise stays out of hashes.
pub fn scrub_timing(v: &mut serde_json::Value) {
    match v {
        serde_json::Value::Object(m) => {
            m.remove("wall_time");
            m.values_mut().for_each(scrub_timing);
        }
        serde_json::Value::Array(a) => a.iter_mut().for_each(scrub_timing),
        _ => {}
    }
}

/// SHA-256 over the CSV text of every table and the timing-free report.
pub fn content_hash(tables: &[Table], report: &serde_json::Value) -> String {
    let mut h = Sha256::new();
    for t in tables {
        h.update(t.name.as_bytes());
        h.update(t.to_csv().as_bytes());
    }
    let mut r = report.clone();
    scrub_timing(&mut r);
    h.update(r.to_string().as_bytes());
    hex::encode(h.finalize())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunRecord {
    pub command: String,
    pub version: String,
    /// Normalized config as TOML text.
    pub config: String,
    pub report: serde_json::Value,
    /// Pass/fail checks; kept out of the hash since some are timings.
    pub checks: serde_json::Value,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub content_hash: String,
}

pub fn unix_now() -> f64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64())
}

impl RunRecord {
    pub fn new(
        command: &str,
        config: String,
        tables: &[Table],
        report: serde_json::Value,
        checks: serde_json::Value,
        started_unix: f64,
    ) -> Self {
        let content_hash = content_hash(tables, &report);
        Self {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config,
            report,
            checks,
            started_unix,
            finished_unix: unix_now(),
            content_hash,
        }
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let text = serde_json::to_string_pretty(self).expect("records serialize");
        std::fs::write(dir.join("record.json"), text)?;
        Ok(())
    }
}
