//! Output directory bookkeeping and the run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use ins_core::ScalarField;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArtifactEntry {
    /// Relative to the output directory, with `/` separators.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridInfo {
    pub n: usize,
    pub d: usize,
}

/// Written last, alongside the results it describes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub verb: String,
    pub scenario: String,
    /// Hash of the canonical (re-emitted) configuration, so formatting does not matter.
    pub config_sha256: String,
    pub versions: BTreeMap<String, String>,
    pub grids: Vec<GridInfo>,
    pub passed: bool,
    /// Wall-clock seconds per phase; the only nondeterministic content of a run.
    pub timings: BTreeMap<String, f64>,
    pub artifacts: Vec<ArtifactEntry>,
}

impl Manifest {
    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST);
        let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Artifacts whose current content no longer matches the recorded hash.
    pub fn stale(&self, dir: &Path) -> Vec<String> {
        self.artifacts
            .iter()
            .filter(|a| fs::read(dir.join(&a.path)).map_or(true, |b| sha256_hex(&b) != a.sha256))
            .map(|a| a.path.clone())
            .collect()
    }
}

/// Files written by one invocation; only these end up in the manifest.
pub struct Artifacts {
    root: PathBuf,
    written: BTreeMap<String, ArtifactEntry>,
}

impl Artifacts {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        Ok(Artifacts { root: root.to_owned(), written: BTreeMap::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        let entry = ArtifactEntry { path: rel.to_owned(), bytes: bytes.len() as u64, sha256: sha256_hex(bytes) };
        self.written.insert(rel.to_owned(), entry);
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(rel, text.as_bytes())
    }

    pub fn write_snapshot(&mut self, rel: &str, name: &str, time: f64, components: &[ScalarField]) -> Result<()> {
        let mut buf = Vec::new();
        ins_core::fields::snapshot::write_snapshot(BufWriter::new(&mut buf), name, time, components)?;
        self.write(rel, &buf)
    }

    pub fn finish(self, mut manifest: Manifest) -> Result<Manifest> {
        manifest.artifacts = self.written.into_values().collect();
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::write(self.root.join(MANIFEST), text)?;
        Ok(manifest)
    }
}

pub fn versions() -> BTreeMap<String, String> {
    BTreeMap::from([
        ("ins-cli".to_owned(), env!("CARGO_PKG_VERSION").to_owned()),
        ("ins-core".to_owned(), ins_core::VERSION.to_owned()),
    ])
}
