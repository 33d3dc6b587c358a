//! Run manifests: what was run, with which config, and hashes of what it wrote.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::Result;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub code_version: String,
    pub seed: u64,
    pub config_hash: String,
    pub config: ExperimentConfig,
    /// Command-specific facts (flags, input checkpoint hashes).
    pub details: BTreeMap<String, String>,
    /// SHA-256 of every file the command left in its directory.
    pub outputs: BTreeMap<String, String>,
}

pub fn file_hash(path: &Path) -> Result<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

fn collect(root: &Path, dir: &Path, out: &mut BTreeMap<String, String>) -> Result<()> {
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            collect(root, &path, out)?;
        } else if path.file_name().is_some_and(|n| n != MANIFEST) {
            let rel = path.strip_prefix(root)?.to_string_lossy().replace('\\', "/");
            out.insert(rel, file_hash(&path)?);
        }
    }
    Ok(())
}

/// Writes `manifest.json` into `dir`, hashing every other file below it.
pub fn write_manifest(
    dir: &Path,
    command: &str,
    cfg: &ExperimentConfig,
    details: BTreeMap<String, String>,
) -> Result<Manifest> {
    let mut outputs = BTreeMap::new();
    collect(dir, dir, &mut outputs)?;
    let m = Manifest {
        command: command.to_string(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: cfg.seed,
        config_hash: cfg.hash(),
        config: cfg.clone(),
        details,
        outputs,
    };
    fs::write(dir.join(MANIFEST), serde_json::to_string_pretty(&m)? + "\n")?;
    Ok(m)
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    Ok(serde_json::from_str(&fs::read_to_string(dir.join(MANIFEST))?)?)
}
