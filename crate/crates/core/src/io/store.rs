//! On-disk artifact store: one directory per match with six JSON artifacts,
//! a manifest with their SHA-256 hashes and the engine configuration used.
//!
//! ```text
//! store/
//!   manifest.json
//!   config.json
//!   matches/<match_id>/{runs,segments,roles,samples,actions,ledger}.json
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::artifacts::MatchArtifacts;
use crate::config::EngineConfig;

pub const STORE_FORMAT: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const CONFIG_FILE: &str = "config.json";
pub const ARTIFACT_KINDS: [&str; 6] = ["runs", "segments", "roles", "samples", "actions", "ledger"];

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Json { path: PathBuf, message: String },
    #[error("{0} is not an artifact store (no {MANIFEST_FILE})")]
    NotAStore(PathBuf),
    #[error("store was built with config {found}, this run uses {expected}")]
    ConfigMismatch { found: String, expected: String },
    #[error("{path}: content hash {found} does not match manifest {expected}")]
    HashMismatch { path: PathBuf, found: String, expected: String },
    #[error("unknown match {0}")]
    UnknownMatch(String),
    #[error("match {0} has no artifacts (status failed)")]
    FailedMatch(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactEntry {
    pub file: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchEntry {
    pub status: MatchStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Input directory the match was read from.
    pub source: String,
    pub lint_warnings: usize,
    pub artifacts: BTreeMap<String, ArtifactEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub engine_version: String,
    pub config_version: u32,
    pub config_hash: String,
    pub matches: BTreeMap<String, MatchEntry>,
}

#[derive(Debug, Clone)]
pub struct Store {
    root: PathBuf,
    manifest: Manifest,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, StoreError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    serde_json::from_slice(&bytes).map_err(|e| StoreError::Json {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(path, bytes).map_err(io_err(path))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Directory name for a match id: anything outside `[A-Za-z0-9._-]`
/// becomes `_`.
pub fn match_dir_name(match_id: &str) -> String {
    let s: String = match_id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-') { c } else { '_' })
        .collect();
    if s.is_empty() || s.chars().all(|c| c == '.') {
        format!("_{s}")
    } else {
        s
    }
}

fn artifact_bytes(a: &MatchArtifacts, kind: &str) -> Vec<u8> {
    let v = match kind {
        "runs" => serde_json::to_vec(&a.runs),
        "segments" => serde_json::to_vec(&a.segments),
        "roles" => serde_json::to_vec(&a.roles),
        "samples" => serde_json::to_vec(&a.samples),
        "actions" => serde_json::to_vec(&a.actions),
        "ledger" => serde_json::to_vec(&a.ledger),
        _ => unreachable!("unknown artifact kind {kind}"),
    };
    v.expect("artifacts serialize")
}

/// Writes the six artifact files of one match under `root` and returns
/// their manifest entries. Safe to call from several workers at once for
/// different matches.
pub fn write_artifacts(root: &Path, a: &MatchArtifacts) -> Result<BTreeMap<String, ArtifactEntry>, StoreError> {
    let dir = Path::new("matches").join(match_dir_name(&a.match_id));
    let mut out = BTreeMap::new();
    for kind in ARTIFACT_KINDS {
        let bytes = artifact_bytes(a, kind);
        let rel = dir.join(format!("{kind}.json"));
        write_bytes(&root.join(&rel), &bytes)?;
        out.insert(
            kind.to_string(),
            ArtifactEntry {
                file: rel.to_string_lossy().replace('\\', "/"),
                sha256: sha256_hex(&bytes),
                bytes: bytes.len() as u64,
            },
        );
    }
    Ok(out)
}

impl Store {
    /// Opens the store at `root`, creating it if needed. An existing store
    /// must have been built with the same configuration.
    pub fn create(root: &Path, cfg: &EngineConfig) -> Result<Store, StoreError> {
        let hash = cfg.hash();
        if root.join(MANIFEST_FILE).exists() {
            let store = Store::open(root)?;
            if store.manifest.config_hash != hash {
                return Err(StoreError::ConfigMismatch {
                    found: store.manifest.config_hash,
                    expected: hash,
                });
            }
            return Ok(store);
        }
        fs::create_dir_all(root).map_err(io_err(root))?;
        write_bytes(&root.join(CONFIG_FILE), cfg.to_json().as_bytes())?;
        let store = Store {
            root: root.to_path_buf(),
            manifest: Manifest {
                format_version: STORE_FORMAT,
                engine_version: env!("CARGO_PKG_VERSION").to_string(),
                config_version: cfg.version,
                config_hash: hash,
                matches: BTreeMap::new(),
            },
        };
        store.save()?;
        Ok(store)
    }

    pub fn open(root: &Path) -> Result<Store, StoreError> {
        let path = root.join(MANIFEST_FILE);
        if !path.exists() {
            return Err(StoreError::NotAStore(root.to_path_buf()));
        }
        Ok(Store {
            root: root.to_path_buf(),
            manifest: read_json(&path)?,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    /// The configuration recorded with the store.
    pub fn config(&self) -> Result<EngineConfig, StoreError> {
        let path = self.root.join(CONFIG_FILE);
        let cfg: EngineConfig = read_json(&path)?;
        if cfg.hash() != self.manifest.config_hash {
            return Err(StoreError::ConfigMismatch {
                found: cfg.hash(),
                expected: self.manifest.config_hash.clone(),
            });
        }
        Ok(cfg)
    }

    pub fn record(&mut self, match_id: &str, entry: MatchEntry) {
        self.manifest.matches.insert(match_id.to_string(), entry);
    }

    /// Writes the manifest. Keys are sorted, so the file only depends on
    /// the recorded entries.
    pub fn save(&self) -> Result<(), StoreError> {
        let mut bytes = serde_json::to_vec_pretty(&self.manifest).expect("manifest serializes");
        bytes.push(b'\n');
        write_bytes(&self.root.join(MANIFEST_FILE), &bytes)
    }

    fn read_verified<T: DeserializeOwned>(&self, entry: &ArtifactEntry) -> Result<T, StoreError> {
        let path = self.root.join(&entry.file);
        let bytes = fs::read(&path).map_err(io_err(&path))?;
        let found = sha256_hex(&bytes);
        if found != entry.sha256 {
            return Err(StoreError::HashMismatch {
                path,
                found,
                expected: entry.sha256.clone(),
            });
        }
        serde_json::from_slice(&bytes).map_err(|e| StoreError::Json {
            path,
            message: e.to_string(),
        })
    }

    /// Loads one match, checking every file against its manifest hash.
    pub fn load(&self, match_id: &str) -> Result<MatchArtifacts, StoreError> {
        let entry = self
            .manifest
            .matches
            .get(match_id)
            .ok_or_else(|| StoreError::UnknownMatch(match_id.to_string()))?;
        if entry.status != MatchStatus::Ok {
            return Err(StoreError::FailedMatch(match_id.to_string()));
        }
        let get = |kind: &str| {
            entry.artifacts.get(kind).ok_or_else(|| StoreError::Json {
                path: self.root.join(MANIFEST_FILE),
                message: format!("match {match_id} lists no {kind} artifact"),
            })
        };
        Ok(MatchArtifacts {
            match_id: match_id.to_string(),
            runs: self.read_verified(get("runs")?)?,
            segments: self.read_verified(get("segments")?)?,
            roles: self.read_verified(get("roles")?)?,
            samples: self.read_verified(get("samples")?)?,
            actions: self.read_verified(get("actions")?)?,
            ledger: self.read_verified(get("ledger")?)?,
        })
    }

    /// All successfully processed matches, in match-id order.
    pub fn load_all(&self) -> Result<Vec<MatchArtifacts>, StoreError> {
        self.manifest
            .matches
            .iter()
            .filter(|(_, e)| e.status == MatchStatus::Ok)
            .map(|(id, _)| self.load(id))
            .collect()
    }
}
