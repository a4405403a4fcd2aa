//! Resumable pipeline state: per-stage input hashes persisted as JSON, so
//! re-running a completed stage with unchanged inputs is a no-op.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

const STATE_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineState {
    version: u32,
    /// Stage name -> hex SHA-256 of the stage's input when it completed.
    stages: BTreeMap<String, String>,
    /// Named seeds recorded for provenance.
    pub seed_registry: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StageStatus {
    Fresh,
    Stale,
}

impl Default for PipelineState {
    fn default() -> Self {
        PipelineState {
            version: STATE_VERSION,
            stages: BTreeMap::new(),
            seed_registry: BTreeMap::new(),
        }
    }
}

impl PipelineState {
    pub fn mark_complete(&mut self, stage: &str, input_hash: &str) {
        self.stages
            .insert(stage.to_string(), input_hash.to_string());
    }

    /// Status of one stage given the current hash of its input.
    pub fn check(&self, stage: &str, current_input_hash: &str) -> StageStatus {
        match self.stages.get(stage) {
            Some(h) if h == current_input_hash => StageStatus::Fresh,
            _ => StageStatus::Stale,
        }
    }

    /// Names of stale stages among `current`, in input order.
    pub fn stale_stages<'a>(&self, current: &'a [(String, String)]) -> Vec<&'a str> {
        current
            .iter()
            .filter(|(stage, hash)| self.check(stage, hash) == StageStatus::Stale)
            .map(|(stage, _)| stage.as_str())
            .collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path)?;
        let state: PipelineState = serde_json::from_str(&raw)
            .map_err(|e| Error::CorruptState(format!("unparseable state file: {e}")))?;
        if state.version != STATE_VERSION {
            return Err(Error::CorruptState(format!(
                "state version {} (expected {STATE_VERSION})",
                state.version
            )));
        }
        if state
            .stages
            .values()
            .any(|h| h.len() != 64 || !h.chars().all(|c| c.is_ascii_hexdigit()))
        {
            return Err(Error::CorruptState("malformed stage hash".into()));
        }
        Ok(state)
    }

    /// Loads the state file, treating a missing file as an empty state
    /// (every stage stale).
    pub fn load_or_default(path: &Path) -> Result<Self> {
        if path.exists() {
            Self::load(path)
        } else {
            Ok(Self::default())
        }
    }
}

/// Advisory exclusive lock; the lock file is removed on drop.
pub struct LockGuard {
    path: PathBuf,
}

impl Drop for LockGuard {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
    }
}

pub fn acquire_lock(state_path: &Path) -> Result<LockGuard> {
    let path = state_path.with_extension("lock");
    match std::fs::OpenOptions::new()
        .write(true)
        .create_new(true)
        .open(&path)
    {
        Ok(_) => Ok(LockGuard { path }),
        Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(Error::CorruptState(
            format!("state is locked by another process ({})", path.display()),
        )),
        Err(e) => Err(e.into()),
    }
}
