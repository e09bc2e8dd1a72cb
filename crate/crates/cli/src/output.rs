//! Output files and their run manifests.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Written next to every output as `<output>.manifest.json`.
#[derive(Debug, Serialize)]
pub struct RunManifest<'a> {
    pub command: &'a [String],
    pub version: &'static str,
    pub seed: Option<u64>,
    pub config: &'a serde_json::Value,
    /// Input path to SHA-256 of its bytes.
    pub inputs: &'a BTreeMap<String, String>,
    pub output: String,
    pub output_sha256: String,
    pub wall_clock_ms: u128,
}

pub struct Run {
    argv: Vec<String>,
    started: Instant,
    pub seed: Option<u64>,
    pub config: serde_json::Value,
    inputs: BTreeMap<String, String>,
}

impl Run {
    pub fn new(argv: Vec<String>, seed: Option<u64>) -> Self {
        Run {
            argv,
            started: Instant::now(),
            seed,
            config: serde_json::Value::Null,
            inputs: BTreeMap::new(),
        }
    }

    /// Records the digest of an input file.
    pub fn input<'p>(&mut self, path: &'p Path) -> Result<&'p Path> {
        let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
        self.inputs.insert(path.display().to_string(), digest(&bytes));
        Ok(path)
    }

    /// Writes `bytes` to `path`, followed by its manifest.
    pub fn emit(&mut self, path: &Path, bytes: &[u8]) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        }
        fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))?;
        let manifest = RunManifest {
            command: &self.argv,
            version: modgov::VERSION,
            seed: self.seed,
            config: &self.config,
            inputs: &self.inputs,
            output: path.display().to_string(),
            output_sha256: digest(bytes),
            wall_clock_ms: self.started.elapsed().as_millis(),
        };
        let mpath = manifest_path(path);
        let mut text = serde_json::to_vec_pretty(&manifest)?;
        text.push(b'\n');
        fs::write(&mpath, text).with_context(|| format!("cannot write {}", mpath.display()))?;
        Ok(())
    }

    /// Like [`Run::emit`], but failures are only reported.
    pub fn emit_best_effort(&mut self, path: &Path, bytes: &[u8]) {
        if let Err(e) = self.emit(path, bytes) {
            eprintln!("warning: chart not written: {e:#}");
        }
    }
}

pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    output.with_file_name(name)
}

/// File-name-safe version of a table or chart name.
pub fn slug(name: &str) -> String {
    let mut out = String::with_capacity(name.len());
    for c in name.chars() {
        if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
            out.push(c.to_ascii_lowercase());
        } else if !out.ends_with('_') {
            out.push('_');
        }
    }
    out.trim_matches('_').to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_name() {
        assert_eq!(
            manifest_path(Path::new("out/tenures.csv")),
            PathBuf::from("out/tenures.csv.manifest.json")
        );
    }

    #[test]
    fn slugs() {
        assert_eq!(slug("dose_response:all"), "dose_response_all");
        assert_eq!(slug("workload all: composition-positive"), "workload_all_composition-positive");
        assert_eq!(slug(">=2y"), "2y");
    }

    #[test]
    fn sha256_of_empty() {
        assert_eq!(
            digest(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}
