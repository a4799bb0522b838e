//! Run directories, atomic writes, CSV formatting and the run manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};

pub const MANIFEST_NAME: &str = "manifest.json";

/// 17 significant digits, enough to round-trip an f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes to a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    let name = path
        .file_name()
        .ok_or_else(|| CliError::Format(format!("{} has no file name", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp", name.to_string_lossy()));
    {
        let mut f = fs::File::create(&tmp).map_err(CliError::io(&tmp))?;
        f.write_all(bytes).map_err(CliError::io(&tmp))?;
        f.sync_all().map_err(CliError::io(&tmp))?;
    }
    fs::rename(&tmp, path).map_err(CliError::io(path))
}

/// A CSV table held in memory until it is written.
#[derive(Debug, Clone)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: vec![],
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(vec![]);
        let fail = |e: csv::Error| CliError::Format(e.to_string());
        w.write_record(&self.header).map_err(fail)?;
        for r in &self.rows {
            w.write_record(r).map_err(fail)?;
        }
        w.into_inner().map_err(|e| CliError::Format(e.to_string()))
    }
}

/// Collects files of one run and writes the manifest last.
#[derive(Debug)]
pub struct RunDir {
    pub root: PathBuf,
}

impl RunDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(CliError::io(root))?;
        Ok(Self { root: root.to_path_buf() })
    }

    pub fn write(&self, name: &str, bytes: &[u8]) -> Result<()> {
        write_atomic(&self.root.join(name), bytes)
    }

    pub fn write_csv(&self, name: &str, table: &Table) -> Result<()> {
        self.write(name, &table.to_bytes()?)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Format(e.to_string()))?;
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    /// Every regular file under the run directory except the manifest,
    /// sorted by relative path.
    pub fn list_files(&self) -> Result<Vec<FileEntry>> {
        let mut out = vec![];
        let mut stack = vec![self.root.clone()];
        while let Some(dir) = stack.pop() {
            for e in fs::read_dir(&dir).map_err(CliError::io(&dir))? {
                let e = e.map_err(CliError::io(&dir))?;
                let p = e.path();
                if p.is_dir() {
                    stack.push(p);
                    continue;
                }
                let rel = p.strip_prefix(&self.root).unwrap_or(&p).to_string_lossy().replace('\\', "/");
                if rel == MANIFEST_NAME || rel.ends_with(".tmp") {
                    continue;
                }
                let bytes = fs::read(&p).map_err(CliError::io(&p))?;
                out.push(FileEntry {
                    path: rel,
                    sha256: sha256_hex(&bytes),
                    bytes: bytes.len() as u64,
                });
            }
        }
        out.sort_by(|a, b| a.path.cmp(&b.path));
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: ExperimentConfig,
    /// sha256 of each input file (config, potentials, samples)
    pub input_checksums: Vec<FileEntry>,
    pub tool_version: String,
    pub started: String,
    pub finished: String,
    pub files: Vec<FileEntry>,
    /// seeds of any pseudo-random draws made by the run
    pub seeds: Vec<u64>,
}

impl RunManifest {
    /// Checks every listed checksum and that no file is unlisted.
    pub fn verify(&self, root: &Path) -> Result<()> {
        let actual = RunDir { root: root.to_path_buf() }.list_files()?;
        if actual != self.files {
            return Err(CliError::Format(format!("manifest of {} does not match its files", root.display())));
        }
        Ok(())
    }
}

pub fn input_entry(path: &Path) -> Result<FileEntry> {
    let bytes = fs::read(path).map_err(CliError::io(path))?;
    Ok(FileEntry {
        path: path.to_string_lossy().into_owned(),
        sha256: sha256_hex(&bytes),
        bytes: bytes.len() as u64,
    })
}

pub fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, -1.0 / 3.0, 6.02214076e23, 5e-324, 2.0f64.sqrt()] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn atomic_write_leaves_no_temporaries() {
        let dir = std::env::temp_dir().join(format!("kahler-out-{}", std::process::id()));
        let run = RunDir::create(&dir).unwrap();
        let mut t = Table::new(&["k", "v"]);
        t.push(vec!["1".into(), fmt_f64(0.5)]);
        run.write_csv("a.csv", &t).unwrap();
        run.write("a.csv", b"k,v\n").unwrap();
        let files = run.list_files().unwrap();
        assert_eq!(files.len(), 1);
        assert_eq!(files[0].sha256, sha256_hex(b"k,v\n"));
        fs::remove_dir_all(&dir).unwrap();
    }
}
