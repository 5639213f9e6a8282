//! Atomic output handling and the per-run manifest.
//!
//! Outputs are staged as `.tmp.<name>` files and renamed into place only
//! when the whole run succeeds, so a failing run never leaves partial
//! outputs behind. The manifest records the config snapshot, input digests,
//! seeds, and output digests; re-running with identical manifest inputs
//! reproduces identical outputs.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use triad_core::Result;

#[derive(Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: String,
    /// Raw argv snapshot of the invocation.
    pub argv: Vec<String>,
    pub threads: usize,
    pub inputs: BTreeMap<String, String>,
    pub seeds: BTreeMap<String, u64>,
    pub config: BTreeMap<String, String>,
    pub wall_clock_secs: f64,
    pub outputs: BTreeMap<String, String>,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn sha256_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Staged output directory.
pub struct OutDir {
    dir: PathBuf,
    staged: Vec<(String, PathBuf)>,
    started: Instant,
    pub manifest: RunManifest,
}

impl OutDir {
    pub fn create(dir: &Path, subcommand: &str) -> Result<OutDir> {
        fs::create_dir_all(dir)?;
        Ok(OutDir {
            dir: dir.to_path_buf(),
            staged: Vec::new(),
            started: Instant::now(),
            manifest: RunManifest {
                tool: "triad",
                version: env!("CARGO_PKG_VERSION"),
                subcommand: subcommand.to_string(),
                argv: std::env::args().collect(),
                threads: rayon::current_num_threads(),
                inputs: BTreeMap::new(),
                seeds: BTreeMap::new(),
                config: BTreeMap::new(),
                wall_clock_secs: 0.0,
                outputs: BTreeMap::new(),
            },
        })
    }

    pub fn record_input(&mut self, path: &Path) -> Result<()> {
        self.manifest
            .inputs
            .insert(path.display().to_string(), sha256_file(path)?);
        Ok(())
    }

    pub fn record_seed(&mut self, name: &str, seed: u64) {
        self.manifest.seeds.insert(name.to_string(), seed);
    }

    pub fn record_config(&mut self, key: &str, value: impl ToString) {
        self.manifest
            .config
            .insert(key.to_string(), value.to_string());
    }

    /// Stages one output file.
    pub fn write(&mut self, name: &str, contents: &[u8]) -> Result<()> {
        let tmp = self.dir.join(format!(".tmp.{name}"));
        fs::write(&tmp, contents)?;
        self.manifest
            .outputs
            .insert(name.to_string(), sha256_bytes(contents));
        self.staged.push((name.to_string(), tmp));
        Ok(())
    }

    /// Renames every staged file into place and writes the manifest.
    pub fn commit(mut self) -> Result<()> {
        for (name, tmp) in &self.staged {
            fs::rename(tmp, self.dir.join(name))?;
        }
        self.staged.clear();
        self.manifest.wall_clock_secs = self.started.elapsed().as_secs_f64();
        let manifest_json = serde_json::to_string_pretty(&self.manifest)
            .map_err(|e| triad_core::Error::invalid(e.to_string()))?;
        let tmp = self.dir.join(".tmp.manifest.json");
        fs::write(&tmp, manifest_json)?;
        fs::rename(tmp, self.dir.join("manifest.json"))?;
        Ok(())
    }
}

impl Drop for OutDir {
    fn drop(&mut self) {
        // A run that never committed leaves nothing behind.
        for (_, tmp) in &self.staged {
            let _ = fs::remove_file(tmp);
        }
    }
}
