//! Run directories named by a content hash of the resolved configuration.
//!
//! A run directory holds `config.json`, the emitted artifacts and a
//! `manifest.json` listing every artifact with its SHA-256 digest. Wall-clock
//! timings go to `timing.json`, which the manifest does not cover, so that all
//! other files are reproducible byte for byte.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::experiments::ExperimentReport;

pub const SCHEMA_VERSION: u32 = 1;
pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Canonical JSON (object keys sorted) of `value`.
pub fn canonical_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    // serde_json::Value keeps object keys in a sorted map.
    let v = serde_json::to_value(value)?;
    Ok(serde_json::to_vec(&v)?)
}

/// First 16 hex digits of the SHA-256 of the canonical JSON of `value`.
pub fn config_hash<T: Serialize>(value: &T) -> Result<String> {
    Ok(hex::encode(Sha256::digest(canonical_json(value)?))[..16].to_string())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub schema_version: u32,
    pub code_version: String,
    /// Subcommand path that produced the run, e.g. `["study", "cutoff"]`.
    pub command: Vec<String>,
    pub config_hash: String,
    /// The resolved configuration; re-running it reproduces the artifacts.
    pub config: serde_json::Value,
    pub files: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_slice(&fs::read(path)?)?)
    }
}

pub struct RunDir {
    path: PathBuf,
    command: Vec<String>,
    config: serde_json::Value,
    hash: String,
    files: Vec<ManifestEntry>,
}

impl RunDir {
    /// Creates (or reuses) `base/<command>-<hash>` and writes `config.json`.
    pub fn create<T: Serialize>(base: &Path, command: &[&str], config: &T) -> Result<Self> {
        let hash = config_hash(config)?;
        let path = base.join(format!("{}-{hash}", command.join("-")));
        fs::create_dir_all(&path)?;
        let config = serde_json::to_value(config)?;
        let mut dir = Self {
            path,
            command: command.iter().map(|s| s.to_string()).collect(),
            config,
            hash,
            files: Vec::new(),
        };
        let text = pretty(&dir.config)?;
        dir.write_bytes("config.json", &text)?;
        Ok(dir)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        if name.contains('/') || name == "manifest.json" || name == "timing.json" {
            return Err(Error::InvalidArgument(format!("reserved or nested artifact name `{name}`")));
        }
        let p = self.path.join(name);
        fs::write(&p, bytes)?;
        self.files.retain(|e| e.file != name);
        self.files.push(ManifestEntry {
            file: name.to_string(),
            sha256: sha256_hex(bytes),
        });
        Ok(p)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let v = serde_json::to_value(value)?;
        self.write_bytes(name, &pretty(&v)?)
    }

    /// Renders CSV (or any text) through `f` and stores it as `name`.
    pub fn write_with<F: FnOnce(&mut Vec<u8>) -> Result<()>>(&mut self, name: &str, f: F) -> Result<PathBuf> {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.write_bytes(name, &buf)
    }

    /// `report.json`, `metrics.csv` and, when rows span several widths, `plot.csv`.
    pub fn write_report(&mut self, report: &ExperimentReport) -> Result<()> {
        let mut r = report.clone();
        r.config_hash = self.hash.clone();
        r.code_version = CODE_VERSION.to_string();
        self.write_json("report.json", &r)?;
        self.write_with("metrics.csv", |w| r.write_metrics_csv(w))?;
        let mut widths: Vec<usize> = r.rows.iter().filter(|row| row.test_rmse.is_some()).filter_map(|row| row.m).collect();
        widths.sort_unstable();
        widths.dedup();
        if widths.len() >= 2 {
            self.write_with("plot.csv", |w| r.write_plot_csv(w))?;
        }
        Ok(())
    }

    /// Writes `timing.json` (if given) and `manifest.json`.
    pub fn finish(mut self, wall_times: Option<&[f64]>) -> Result<PathBuf> {
        if let Some(t) = wall_times {
            let mut f = fs::File::create(self.path.join("timing.json"))?;
            f.write_all(&pretty(&serde_json::json!({ "wall_times_s": t }))?)?;
        }
        self.files.sort_by(|a, b| a.file.cmp(&b.file));
        let manifest = Manifest {
            schema_version: SCHEMA_VERSION,
            code_version: CODE_VERSION.to_string(),
            command: self.command.clone(),
            config_hash: self.hash.clone(),
            config: self.config.clone(),
            files: std::mem::take(&mut self.files),
        };
        fs::write(self.path.join("manifest.json"), pretty(&serde_json::to_value(&manifest)?)?)?;
        Ok(self.path)
    }
}

fn pretty(v: &serde_json::Value) -> Result<Vec<u8>> {
    let mut s = serde_json::to_vec_pretty(v)?;
    s.push(b'\n');
    Ok(s)
}

/// Recomputes the digests of a finished run directory and returns the files
/// whose contents no longer match the manifest.
pub fn verify_run_dir(path: &Path) -> Result<Vec<String>> {
    let m = Manifest::load(&path.join("manifest.json"))?;
    let mut bad = Vec::new();
    for e in &m.files {
        match fs::read(path.join(&e.file)) {
            Ok(bytes) if sha256_hex(&bytes) == e.sha256 => {}
            _ => bad.push(e.file.clone()),
        }
    }
    Ok(bad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::MetricRow;

    #[derive(Serialize)]
    struct Cfg {
        b: u32,
        a: f64,
    }

    #[test]
    fn hash_is_key_order_independent() {
        let h1 = config_hash(&Cfg { b: 1, a: 0.5 }).unwrap();
        let h2 = config_hash(&serde_json::json!({"a": 0.5, "b": 1})).unwrap();
        assert_eq!(h1, h2);
        assert_eq!(h1.len(), 16);
        assert_ne!(h1, config_hash(&Cfg { b: 2, a: 0.5 }).unwrap());
        // sha256("") oracle.
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn run_dir_round_trip() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = Cfg { b: 3, a: 1.0 };
        let mut dir = RunDir::create(tmp.path(), &["study", "x"], &cfg).unwrap();
        let mut r = ExperimentReport::new("x", "f");
        for m in [4, 8] {
            let mut row = MetricRow::labeled(format!("m={m}"));
            row.m = Some(m);
            row.test_rmse = Some(0.1);
            r.rows.push(row);
        }
        dir.write_report(&r).unwrap();
        let path = dir.finish(Some(&[0.5])).unwrap();
        assert!(path.file_name().unwrap().to_str().unwrap().starts_with("study-x-"));
        for f in ["config.json", "report.json", "metrics.csv", "plot.csv", "manifest.json", "timing.json"] {
            assert!(path.join(f).exists(), "{f}");
        }
        let m = Manifest::load(&path.join("manifest.json")).unwrap();
        assert_eq!(m.command, vec!["study", "x"]);
        assert_eq!(m.files.len(), 4);
        assert!(verify_run_dir(&path).unwrap().is_empty());
        fs::write(path.join("metrics.csv"), "tampered").unwrap();
        assert_eq!(verify_run_dir(&path).unwrap(), vec!["metrics.csv".to_string()]);
        let report: serde_json::Value =
            serde_json::from_slice(&fs::read(path.join("report.json")).unwrap()).unwrap();
        assert_eq!(report["config_hash"], m.config_hash.as_str());
    }

    #[test]
    fn reserved_names() {
        let tmp = tempfile::tempdir().unwrap();
        let mut dir = RunDir::create(tmp.path(), &["x"], &1).unwrap();
        assert!(dir.write_bytes("manifest.json", b"{}").is_err());
        assert!(dir.write_bytes("a/b", b"{}").is_err());
    }
}
