//! On-disk layout of an experiment run and the manifest that makes runs
//! resumable.
//!
//! Every artifact is written atomically (temp file + rename) and its SHA-256
//! recorded in `manifest.json`. On a re-run with the same effective config,
//! a stage whose artifact still hashes to the manifest value is skipped and
//! the file left untouched. The manifest stores relative paths only and no
//! timestamps, so two runs of the same experiment produce byte-identical
//! trees even in different output directories.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::RunError;

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for byte in digest {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Write `bytes` to `path` atomically via a temp sibling plus rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), RunError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err(path))?;
    }
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
        f.write_all(bytes).map_err(io_err(&tmp))?;
        f.sync_all().map_err(io_err(&tmp))?;
    }
    fs::rename(&tmp, path).map_err(io_err(path))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HostInfo {
    pub os: String,
    pub arch: String,
}

impl HostInfo {
    pub fn current() -> Self {
        Self {
            os: std::env::consts::OS.to_string(),
            arch: std::env::consts::ARCH.to_string(),
        }
    }
}

/// Run manifest: effective-config hash plus content hashes of every stage
/// artifact, keyed by path relative to the output root.
///
/// `report.json` is deliberately absent — it is regenerated (bit-identically)
/// on every run and written after the final manifest update, so the report is
/// always the last file to land.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub seed: u64,
    pub host: HostInfo,
    pub artifacts: BTreeMap<String, String>,
}

/// Artifact directory for one run.
pub struct ArtifactStore {
    root: PathBuf,
    manifest: Manifest,
}

impl ArtifactStore {
    /// Open (creating if needed) the output tree rooted at `root`.
    ///
    /// An existing manifest is honored only if its `config_hash` matches the
    /// current effective config; otherwise all prior artifacts are considered
    /// stale and will be recomputed.
    pub fn open(root: &Path, config_hash: String, seed: u64) -> Result<Self, RunError> {
        fs::create_dir_all(root).map_err(io_err(root))?;
        let manifest_path = root.join(MANIFEST_FILE);
        let manifest = match fs::read_to_string(&manifest_path) {
            Ok(raw) => match serde_json::from_str::<Manifest>(&raw) {
                Ok(m) if m.config_hash == config_hash => m,
                _ => Manifest {
                    config_hash: config_hash.clone(),
                    seed,
                    host: HostInfo::current(),
                    artifacts: BTreeMap::new(),
                },
            },
            Err(_) => Manifest {
                config_hash: config_hash.clone(),
                seed,
                host: HostInfo::current(),
                artifacts: BTreeMap::new(),
            },
        };
        let store = Self {
            root: root.to_path_buf(),
            manifest: Manifest {
                config_hash,
                seed,
                host: HostInfo::current(),
                artifacts: manifest.artifacts,
            },
        };
        store.save_manifest()?;
        Ok(store)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Absolute path for an artifact named by its manifest-relative path.
    pub fn abs(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    /// True when `rel` exists on disk and still hashes to the manifest entry.
    pub fn is_valid(&self, rel: &str) -> bool {
        let Some(expected) = self.manifest.artifacts.get(rel) else {
            return false;
        };
        match fs::read(self.abs(rel)) {
            Ok(bytes) => sha256_hex(&bytes) == *expected,
            Err(_) => false,
        }
    }

    /// Hash an already-written file into the manifest.
    pub fn record(&mut self, rel: &str) -> Result<(), RunError> {
        let path = self.abs(rel);
        let bytes = fs::read(&path).map_err(io_err(&path))?;
        self.manifest
            .artifacts
            .insert(rel.to_string(), sha256_hex(&bytes));
        self.save_manifest()
    }

    /// Atomically write an artifact and record its hash.
    pub fn write_bytes(&mut self, rel: &str, bytes: &[u8]) -> Result<(), RunError> {
        write_atomic(&self.abs(rel), bytes)?;
        self.manifest
            .artifacts
            .insert(rel.to_string(), sha256_hex(bytes));
        self.save_manifest()
    }

    /// Serialize `items` as JSON Lines and store under `rel`.
    pub fn write_jsonl<T: Serialize>(&mut self, rel: &str, items: &[T]) -> Result<(), RunError> {
        let mut out = String::new();
        for item in items {
            out.push_str(
                &serde_json::to_string(item)
                    .map_err(|e| RunError::Config(format!("serializing {rel}: {e}")))?,
            );
            out.push('\n');
        }
        self.write_bytes(rel, out.as_bytes())
    }

    /// Read a JSON Lines artifact back.
    pub fn read_jsonl<T: DeserializeOwned>(&self, rel: &str) -> Result<Vec<T>, RunError> {
        let path = self.abs(rel);
        let raw = fs::read_to_string(&path).map_err(io_err(&path))?;
        let mut items = Vec::new();
        for (lineno, line) in raw.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            items.push(serde_json::from_str(line).map_err(|e| {
                RunError::Config(format!("{}:{}: {e}", path.display(), lineno + 1))
            })?);
        }
        Ok(items)
    }

    /// Write a file that is regenerated every run and never tracked in the
    /// manifest (the final report).
    pub fn write_untracked(&self, rel: &str, bytes: &[u8]) -> Result<(), RunError> {
        write_atomic(&self.abs(rel), bytes)
    }

    fn save_manifest(&self) -> Result<(), RunError> {
        let mut body = serde_json::to_string_pretty(&self.manifest)
            .map_err(|e| RunError::Config(format!("serializing manifest: {e}")))?;
        body.push('\n');
        write_atomic(&self.root.join(MANIFEST_FILE), body.as_bytes())
    }
}

/// Make a model name safe to embed in a cache filename.
pub fn sanitize_for_filename(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '.' || c == '_' || c == '-' {
                c
            } else {
                '-'
            }
        })
        .collect()
}
