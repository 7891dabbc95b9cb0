use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::failure::{Failure, Stage};

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct OutputFile {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct BudgetUse {
    pub operation: String,
    pub visited: u64,
    pub budget: u64,
}

/// Everything needed to rerun a command and check its outputs.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config_sha256: String,
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub workers: Option<usize>,
    pub budget: Option<u64>,
    pub budgets_consumed: Vec<BudgetUse>,
    pub wall_clock_seconds: f64,
    pub outputs: Vec<OutputFile>,
}

/// Output directory that records what was written.
pub struct OutDir {
    dir: PathBuf,
    files: Vec<OutputFile>,
}

impl OutDir {
    pub fn create(dir: &Path) -> Result<Self, Failure> {
        fs::create_dir_all(dir).stage("output")?;
        Ok(OutDir {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, bytes: impl AsRef<[u8]>) -> Result<(), Failure> {
        let bytes = bytes.as_ref();
        write_atomic(&self.dir.join(name), bytes)?;
        self.files.retain(|f| f.path != name);
        self.files.push(OutputFile {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len(),
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), Failure> {
        let mut text = serde_json::to_string_pretty(value).stage("output")?;
        text.push('\n');
        self.write(name, text)
    }

    pub fn write_jsonl<T: Serialize>(
        &mut self,
        name: &str,
        rows: impl IntoIterator<Item = T>,
    ) -> Result<(), Failure> {
        let mut text = String::new();
        for r in rows {
            text.push_str(&serde_json::to_string(&r).stage("output")?);
            text.push('\n');
        }
        self.write(name, text)
    }

    pub fn finish(self, mut manifest: RunManifest) -> Result<(), Failure> {
        manifest.outputs = self.files;
        let text = serde_json::to_string_pretty(&manifest).stage("manifest")?;
        write_atomic(&self.dir.join("manifest.json"), text.as_bytes())
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let tmp = path.with_extension("tmp~");
    fs::write(&tmp, bytes).stage("output")?;
    fs::rename(&tmp, path).stage("output")
}
