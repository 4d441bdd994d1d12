//! Shared helpers: configuration loading and step-line printing.

use std::fs;
use std::path::Path;

use serde::Deserialize;
use smelt::model::ModelConfig;
use smelt::train::TrainConfig;
use smelt::{Error, Result};

/// A run configuration file: the model architecture plus the optimizer
/// schedule. Checkpoint bundles store the same layout in `config.json`.
#[derive(Deserialize)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub train: TrainConfig,
}

/// Reads a configuration file as text. Unreadable configuration is a
/// configuration error, so callers exit with the config status code.
pub fn read_config_text(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))
}

pub fn read_run_config(path: &Path) -> Result<RunConfig> {
    let text = read_config_text(path)?;
    let cfg: RunConfig = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    cfg.model.validate()?;
    cfg.train.validate()?;
    Ok(cfg)
}

pub fn read_model_config(path: &Path) -> Result<ModelConfig> {
    let text = read_config_text(path)?;
    let cfg: ModelConfig = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    cfg.validate()?;
    Ok(cfg)
}

/// One metrics line per optimizer step. `{}` on an `f64` prints the
/// shortest digits that parse back to the same value, so logged losses
/// compare exactly across runs.
pub fn print_step(step: u64, lr: f64, loss: f64) {
    println!("step={step} lr={lr} loss={loss}");
}
