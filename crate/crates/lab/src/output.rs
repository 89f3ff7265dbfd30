//! CSV/JSON artifacts and the run manifest.
//!
//! Floats are written as the shortest decimal that round-trips, with `.` as
//! separator and LF line endings. The manifest goes last, through a rename,
//! so its presence marks a finished run.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{LabError, LabResult};

pub const MANIFEST: &str = "manifest.json";

/// Shortest round-trip decimal of `x`.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

/// Optional values are written as an empty field.
pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// An in-memory CSV table with a mandatory header.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&'static str]) -> Self {
        Self {
            name: name.to_string(),
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> LabResult<Vec<u8>> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let err = |e: csv::Error| LabError::Format {
            path: PathBuf::from(&self.name),
            reason: e.to_string(),
        };
        w.write_record(&self.header).map_err(err)?;
        for r in &self.rows {
            w.write_record(r).map_err(err)?;
        }
        w.into_inner().map_err(|e| LabError::Format {
            path: PathBuf::from(&self.name),
            reason: e.to_string(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmittedFile {
    pub name: String,
    /// Data rows (header excluded) for CSV, 1 for JSON.
    pub rows: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub config_hash: String,
    pub code_version: String,
    pub seed: u64,
    pub jobs: usize,
    pub start_unix_ms: u128,
    pub end_unix_ms: u128,
    pub files: Vec<EmittedFile>,
    pub deviations: Vec<String>,
    /// `complete`, or `partial` when the run stopped on an error.
    pub status: String,
    pub error: Option<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

pub fn unix_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

/// Output directory of one run. Any stale manifest is removed on open.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    pub files: Vec<EmittedFile>,
}

impl OutputDir {
    pub fn open(root: &Path) -> LabResult<Self> {
        fs::create_dir_all(root).map_err(|e| LabError::io(root, e))?;
        let m = root.join(MANIFEST);
        if m.exists() {
            fs::remove_file(&m).map_err(|e| LabError::io(&m, e))?;
        }
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    fn emit(&mut self, name: &str, bytes: &[u8], rows: usize) -> LabResult<()> {
        let p = self.path(name);
        fs::write(&p, bytes).map_err(|e| LabError::io(&p, e))?;
        self.files.retain(|f| f.name != name);
        self.files.push(EmittedFile {
            name: name.to_string(),
            rows,
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    pub fn write_csv(&mut self, table: &Table) -> LabResult<()> {
        let bytes = table.to_bytes()?;
        self.emit(&table.name, &bytes, table.rows.len())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> LabResult<()> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| LabError::Format {
            path: self.path(name),
            reason: e.to_string(),
        })?;
        bytes.push(b'\n');
        self.emit(name, &bytes, 1)
    }

    /// Records a file written by other means (e.g. a checkpoint).
    pub fn register(&mut self, name: &str) -> LabResult<()> {
        let p = self.path(name);
        let bytes = fs::read(&p).map_err(|e| LabError::io(&p, e))?;
        self.files.retain(|f| f.name != name);
        self.files.push(EmittedFile {
            name: name.to_string(),
            rows: 1,
            sha256: sha256_hex(&bytes),
        });
        Ok(())
    }

    /// Writes the manifest through a temporary file and a rename.
    pub fn finish(&self, manifest: &RunManifest) -> LabResult<PathBuf> {
        let tmp = self.path("manifest.json.tmp");
        let dst = self.path(MANIFEST);
        let mut bytes = serde_json::to_vec_pretty(manifest).map_err(|e| LabError::Format {
            path: dst.clone(),
            reason: e.to_string(),
        })?;
        bytes.push(b'\n');
        fs::write(&tmp, bytes).map_err(|e| LabError::io(&tmp, e))?;
        fs::rename(&tmp, &dst).map_err(|e| LabError::io(&dst, e))?;
        Ok(dst)
    }
}

pub fn read_manifest(dir: &Path) -> LabResult<RunManifest> {
    let p = dir.join(MANIFEST);
    let bytes = fs::read(&p).map_err(|e| LabError::io(&p, e))?;
    serde_json::from_slice(&bytes).map_err(|e| LabError::Format {
        path: p,
        reason: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_in_shortest_form() {
        assert_eq!(num(0.1), "0.1");
        assert_eq!(num(1.0), "1.0");
        assert_eq!(num(1e-5), "1e-5");
        assert_eq!(num(-0.0), "-0.0");
        for x in [0.1 + 0.2, 1.0 / 3.0, 6.02214076e23, f64::MIN_POSITIVE, 5e-324] {
            assert_eq!(num(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
        assert_eq!(opt(None), "");
    }

    #[test]
    fn csv_has_header_and_lf_endings() {
        let mut t = Table::new("x.csv", &["a", "b"]);
        t.push(vec![num(0.5), "q,r".into()]);
        let s = String::from_utf8(t.to_bytes().unwrap()).unwrap();
        assert_eq!(s, "a,b\n0.5,\"q,r\"\n");
    }

    #[test]
    fn manifest_is_written_last_and_lists_files() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join(MANIFEST), "stale").unwrap();
        let mut out = OutputDir::open(dir.path()).unwrap();
        assert!(!dir.path().join(MANIFEST).exists());
        let mut t = Table::new("t.csv", &["k"]);
        t.push(vec!["1".into()]);
        t.push(vec!["2".into()]);
        out.write_csv(&t).unwrap();
        let m = RunManifest {
            subcommand: "solve".into(),
            config_hash: sha256_hex(b""),
            code_version: "0".into(),
            seed: 1,
            jobs: 1,
            start_unix_ms: 0,
            end_unix_ms: 0,
            files: out.files.clone(),
            deviations: vec![],
            status: "complete".into(),
            error: None,
        };
        out.finish(&m).unwrap();
        let back = read_manifest(dir.path()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.files[0].rows, 2);
        assert!(!dir.path().join("manifest.json.tmp").exists());
    }
}
