//! JSON configuration and JSON matrix files.
//!
//! Effective pipeline settings resolve as built-in defaults, then the config
//! file (if any), then command-line overrides; later sources win per field.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::Matrix;
use crate::types::{Mode, PipelineConfig};

/// Parses a config document. Missing fields keep their defaults; unknown
/// fields are an error.
pub fn parse_config(text: &str) -> Result<PipelineConfig> {
    let cfg: PipelineConfig =
        serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<PipelineConfig> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_config(&text).map_err(|e| match e {
        Error::InvalidConfig(m) => Error::InvalidConfig(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Per-field overrides from the command line.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ConfigOverrides {
    pub rho_sem: Option<f64>,
    pub rho_spa: Option<f64>,
    pub tau_merge: Option<f64>,
    pub depth_threshold: Option<f64>,
    pub online_threshold: Option<f64>,
    pub mode: Option<Mode>,
}

impl ConfigOverrides {
    pub fn apply(&self, mut cfg: PipelineConfig) -> PipelineConfig {
        cfg.rho_sem = self.rho_sem.unwrap_or(cfg.rho_sem);
        cfg.rho_spa = self.rho_spa.unwrap_or(cfg.rho_spa);
        cfg.tau_merge = self.tau_merge.unwrap_or(cfg.tau_merge);
        cfg.depth_threshold = self.depth_threshold.unwrap_or(cfg.depth_threshold);
        cfg.online_threshold = self.online_threshold.unwrap_or(cfg.online_threshold);
        cfg.mode = self.mode.unwrap_or(cfg.mode);
        cfg
    }
}

/// Defaults, then `file`, then `overrides`.
pub fn resolve_config(file: Option<&Path>, overrides: &ConfigOverrides) -> Result<PipelineConfig> {
    let base = match file {
        Some(p) => load_config(p)?,
        None => PipelineConfig::default(),
    };
    let cfg = overrides.apply(base);
    cfg.validate()?;
    Ok(cfg)
}

/// Reads a JSON array of equal-length numeric rows.
pub fn read_matrix_json(path: impl AsRef<Path>) -> Result<Matrix> {
    let rows: Vec<Vec<f32>> = serde_json::from_str(&fs::read_to_string(path)?)?;
    if rows.is_empty() {
        return Err(Error::EmptyBatch);
    }
    Matrix::from_rows(&rows)
}

pub fn write_matrix_json(m: &Matrix, path: impl AsRef<Path>) -> Result<()> {
    let rows: Vec<&[f32]> = m.iter_rows().collect();
    fs::write(path, serde_json::to_string(&rows)?)?;
    Ok(())
}
