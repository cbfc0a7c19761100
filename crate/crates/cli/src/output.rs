//! CSV tables and run manifests.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// A comma-separated table accumulated in memory.
#[derive(Clone, Debug)]
pub struct Csv {
    text: String,
    width: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self {
            text: format!("{}\n", header.join(",")),
            width: header.len(),
        }
    }

    pub fn row(&mut self, cells: &[String]) {
        assert_eq!(cells.len(), self.width, "CSV row width");
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn text(&self) -> &str {
        &self.text
    }
}

pub fn num(v: f64) -> String {
    format!("{v:e}")
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// Files written into one output directory, tracked for the manifest.
#[derive(Debug)]
pub struct OutDir {
    root: PathBuf,
    files: Vec<String>,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        fs::write(self.root.join(name), contents)?;
        self.track(name);
        Ok(())
    }

    pub fn track(&mut self, name: &str) {
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }
}

#[derive(Debug, Serialize)]
struct ManifestFile {
    path: String,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    grid: String,
    start_unix: f64,
    end_unix: f64,
    termination: &'a str,
    files: Vec<ManifestFile>,
    config: &'a str,
}

pub fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

/// Run description written last, after every other file.
pub struct RunInfo<'a> {
    pub command: &'a str,
    pub grid: String,
    pub start: f64,
    pub termination: &'a str,
    pub config: &'a str,
}

pub fn write_manifest(out: &mut OutDir, info: &RunInfo) -> Result<(), CliError> {
    let mut files = Vec::new();
    for name in out.files() {
        let bytes = fs::read(out.path().join(name))?;
        files.push(ManifestFile {
            path: name.clone(),
            sha256: sha256_hex(&bytes),
        });
    }
    let manifest = Manifest {
        command: info.command,
        version: env!("CARGO_PKG_VERSION"),
        grid: info.grid.clone(),
        start_unix: info.start,
        end_unix: unix_now(),
        termination: info.termination,
        files,
        config: info.config,
    };
    let text = toml::to_string(&manifest)
        .map_err(|e| CliError::Usage(format!("manifest serialization: {e}")))?;
    fs::write(out.path().join("manifest.toml"), text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_of_empty_input() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn csv_rows_are_comma_separated() {
        let mut c = Csv::new(&["a", "b"]);
        c.row(&[num(1.5), opt(None)]);
        assert_eq!(c.text(), "a,b\n1.5e0,\n");
    }
}
