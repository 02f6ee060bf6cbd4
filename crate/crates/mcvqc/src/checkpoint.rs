//! Versioned JSON checkpoints: model (parameters, permutation, seed),
//! optimizer state, history and the hash of the config that produced them.

use std::fs;
use std::path::Path;

use mcvqc_core::metrics::MetricsRecord;
use mcvqc_core::models::Model;
use mcvqc_core::optim::AdamState;
use serde::{Deserialize, Serialize};

use crate::config::{ModelKind, Seeds};
use crate::error::{Error, Result};

pub const FORMAT: &str = "mcvqc-checkpoint";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub config_hash: String,
    pub kind: ModelKind,
    /// Completed epochs.
    pub epoch: usize,
    pub seeds: Seeds,
    pub model: Model,
    pub optimizer: AdamState,
    pub history: Vec<MetricsRecord>,
}

impl Checkpoint {
    pub fn new(
        config_hash: String,
        kind: ModelKind,
        epoch: usize,
        seeds: Seeds,
        model: Model,
        optimizer: AdamState,
        history: Vec<MetricsRecord>,
    ) -> Self {
        Checkpoint { format: FORMAT.into(), version: VERSION, config_hash, kind, epoch, seeds, model, optimizer, history }
    }

    /// Writes via a temporary file so a crash never leaves a torn checkpoint.
    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, serde_json::to_vec(self)?).map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let head: serde_json::Value = serde_json::from_slice(&bytes)?;
        match (head.get("format").and_then(|v| v.as_str()), head.get("version").and_then(|v| v.as_u64())) {
            (Some(FORMAT), Some(v)) if v == VERSION as u64 => {}
            (Some(FORMAT), v) => {
                return Err(Error::Checkpoint(format!("{}: unsupported version {v:?}, expected {VERSION}", path.display())))
            }
            _ => return Err(Error::Checkpoint(format!("{}: not an mcvqc checkpoint", path.display()))),
        }
        let ck: Checkpoint = serde_json::from_value(head)?;
        if let Model::Ensemble(m) = &ck.model {
            m.validate().map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))?;
        }
        if ck.optimizer.m.len() != mcvqc_core::models::Trainable::param_count(&ck.model) {
            return Err(Error::Checkpoint(format!("{}: optimizer state does not match parameter count", path.display())));
        }
        Ok(ck)
    }
}
