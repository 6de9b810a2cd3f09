//! The evaluation manifest: one JSON document listing every mixture with
//! its reference and estimate files. Paths are relative to the manifest
//! file so a dataset directory can be moved or diffed as a unit.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use s5eval_core::K_MAX;

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("cannot read manifest {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot parse manifest {path}: {source}")]
    Parse {
        path: String,
        source: serde_json::Error,
    },
    #[error("duplicate mixture id {id:?}")]
    DuplicateId { id: String },
    #[error("mixture {id:?}: {reason}")]
    BadEntry { id: String, reason: String },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct SourceEntry {
    pub label: String,
    pub path: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct MixtureEntry {
    pub id: String,
    /// Path of the (possibly multi-channel) mixture file.
    pub mixture: String,
    /// 0-based index of the reference channel within the mixture file.
    /// Dataset descriptions that count channels from 1 mean channel 0
    /// here.
    #[serde(default)]
    pub ref_channel: usize,
    /// Optional subset tag (e.g. "dup" / "nodup") used for per-subset
    /// aggregation in reports.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subset: Option<String>,
    pub references: Vec<SourceEntry>,
    #[serde(default)]
    pub estimates: Vec<SourceEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct Manifest {
    /// Optional closed label vocabulary; when present, every label in the
    /// manifest must come from it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vocabulary: Option<Vec<String>>,
    pub mixtures: Vec<MixtureEntry>,
}

impl Manifest {
    /// Reads and validates a manifest; returns it with its base directory
    /// for resolving relative paths.
    pub fn load(path: &Path) -> Result<(Manifest, PathBuf), ManifestError> {
        let text = std::fs::read_to_string(path).map_err(|source| ManifestError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let manifest: Manifest =
            serde_json::from_str(&text).map_err(|source| ManifestError::Parse {
                path: path.display().to_string(),
                source,
            })?;
        manifest.validate()?;
        let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Ok((manifest, base))
    }

    pub fn save(&self, path: &Path) -> Result<(), ManifestError> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(path, text).map_err(|source| ManifestError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn validate(&self) -> Result<(), ManifestError> {
        let mut ids = BTreeSet::new();
        let vocabulary: Option<BTreeSet<&str>> = self
            .vocabulary
            .as_ref()
            .map(|v| v.iter().map(String::as_str).collect());
        for entry in &self.mixtures {
            if !ids.insert(&entry.id) {
                return Err(ManifestError::DuplicateId {
                    id: entry.id.clone(),
                });
            }
            if entry.references.is_empty() || entry.references.len() > K_MAX {
                return Err(ManifestError::BadEntry {
                    id: entry.id.clone(),
                    reason: format!(
                        "expected 1..={K_MAX} references, got {}",
                        entry.references.len()
                    ),
                });
            }
            for source in entry.references.iter().chain(&entry.estimates) {
                if source.label.is_empty() {
                    return Err(ManifestError::BadEntry {
                        id: entry.id.clone(),
                        reason: format!("empty label for {}", source.path),
                    });
                }
                if let Some(vocab) = &vocabulary {
                    if !vocab.contains(source.label.as_str()) {
                        return Err(ManifestError::BadEntry {
                            id: entry.id.clone(),
                            reason: format!("label {:?} not in the vocabulary", source.label),
                        });
                    }
                }
            }
        }
        Ok(())
    }
}
