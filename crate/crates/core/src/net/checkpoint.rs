//! Single-file JSON checkpoint holding the model config, all parameters and
//! the optimizer state. Floats are written in shortest round-trip form so a
//! save/load cycle is bit-exact.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Model;
use crate::error::{Error, Result};
use crate::optim::Optimizer;

pub const CHECKPOINT_FORMAT: &str = "smelu-repro/checkpoint/v1";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub model: Model,
    pub optimizer: Option<Optimizer>,
}

pub fn save_checkpoint(path: &Path, model: &Model, optimizer: Option<&Optimizer>) -> Result<()> {
    let ckpt = Checkpoint {
        format: CHECKPOINT_FORMAT.to_string(),
        model: model.clone(),
        optimizer: optimizer.cloned(),
    };
    let text = serde_json::to_string(&ckpt)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut ckpt: Checkpoint = serde_json::from_str(&text)?;
    if ckpt.format != CHECKPOINT_FORMAT {
        return Err(Error::InvalidSpec(format!(
            "unsupported checkpoint format '{}'",
            ckpt.format
        )));
    }
    ckpt.model.config.validate()?;
    ckpt.model.refresh()?;
    Ok(ckpt)
}
