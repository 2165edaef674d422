//! CSV tables and the JSON run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::ScenarioConfig;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table { name: name.to_string(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| crate::Error::Io(e.into_error()))
    }
}

/// Shortest round-trip decimal form.
pub fn num(x: f64) -> String {
    format!("{x}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub units: serde_json::Value,
    pub oracle_only: bool,
    pub config: ScenarioConfig,
    pub files: Vec<FileEntry>,
    #[serde(default)]
    pub summary: serde_json::Value,
}

#[derive(Debug, Clone, Default)]
pub struct Bundle {
    pub tables: Vec<Table>,
    pub json: Vec<(String, serde_json::Value)>,
    pub summary: serde_json::Value,
}

impl Bundle {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }
}

pub fn units() -> serde_json::Value {
    serde_json::json!({
        "config_frequencies": "Hz",
        "internal_frequencies": "rad/s, omega = 2 pi f",
        "time": "s",
        "psd": "1/Hz (s)",
        "filter": "F(omega) = |1/2 int Omega(t) e^{i omega t} dt|^2, rad^2",
        "signal": "S(T), dimensionless",
    })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Write every table and JSON document, then the manifest last.
pub fn write_bundle(
    dir: &Path,
    cfg: &ScenarioConfig,
    bundle: &Bundle,
    oracle_only: bool,
    error: Option<String>,
) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    for t in &bundle.tables {
        let bytes = t.to_csv()?;
        let name = format!("{}.csv", t.name);
        fs::write(dir.join(&name), &bytes)?;
        files.push(FileEntry { name, sha256: sha256_hex(&bytes), bytes: bytes.len() });
    }
    for (n, v) in &bundle.json {
        let bytes = serde_json::to_vec_pretty(v)?;
        let name = format!("{n}.json");
        fs::write(dir.join(&name), &bytes)?;
        files.push(FileEntry { name, sha256: sha256_hex(&bytes), bytes: bytes.len() });
    }
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        status: if error.is_some() { "error".into() } else { "ok".into() },
        error,
        units: units(),
        oracle_only,
        config: cfg.clone(),
        files,
        summary: bundle.summary.clone(),
    };
    let path = dir.join("manifest.json");
    fs::write(&path, serde_json::to_vec_pretty(&manifest)?)?;
    Ok(path)
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    Ok(serde_json::from_slice(&fs::read(path)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::ScenarioName;

    #[test]
    fn csv_quotes_and_header() {
        let mut t = Table::new("x", &["a", "b"]);
        t.push(vec!["1".into(), "p;q,r".into()]);
        assert_eq!(String::from_utf8(t.to_csv().unwrap()).unwrap(), "a,b\n1,\"p;q,r\"\n");
    }

    #[test]
    fn num_round_trips() {
        for x in [0.1, 1e-300, -2.5e7, 1.0 / 3.0] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn bundle_hashes_match_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = Table::new("psd", &["f"]);
        t.push(vec!["1".into()]);
        let b = Bundle { tables: vec![t], json: vec![("extra".into(), serde_json::json!({"k": 1}))], summary: serde_json::json!({}) };
        let cfg = ScenarioConfig::default_for(ScenarioName::Custom);
        let path = write_bundle(dir.path(), &cfg, &b, true, None).unwrap();
        let m = read_manifest(&path).unwrap();
        assert_eq!(m.status, "ok");
        assert_eq!(m.config, cfg);
        assert_eq!(m.files.len(), 2);
        for f in &m.files {
            let bytes = fs::read(dir.path().join(&f.name)).unwrap();
            assert_eq!(sha256_hex(&bytes), f.sha256);
            assert_eq!(bytes.len(), f.bytes);
        }
    }

    #[test]
    fn error_manifest_carries_message() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ScenarioConfig::default_for(ScenarioName::Custom);
        let path = write_bundle(dir.path(), &cfg, &Bundle::default(), false, Some("boom".into())).unwrap();
        let m = read_manifest(&path).unwrap();
        assert_eq!((m.status.as_str(), m.error.as_deref()), ("error", Some("boom")));
    }
}
