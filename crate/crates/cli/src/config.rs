//! Declarative run configuration: one TOML file with optional sections,
//! overridden by command-line flags (flags win).

use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use spart::assignment::AssignConfig;
use spart::extraction::ExtractConfig;
use spart::synth::SceneConfig;

#[derive(Debug, Default, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct FileConfig {
    pub scene: Option<SceneConfig>,
    pub assign: Option<AssignConfig>,
    pub extract: Option<ExtractConfig>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading config {}", p.display()))?;
                let cfg: FileConfig = toml::from_str(&text)
                    .with_context(|| format!("parsing config {}", p.display()))?;
                Ok(cfg)
            }
        }
    }

    pub fn scene(&self) -> SceneConfig {
        self.scene.clone().unwrap_or_default()
    }

    pub fn assign(&self) -> AssignConfig {
        self.assign.clone().unwrap_or_default()
    }

    pub fn extract(&self) -> ExtractConfig {
        self.extract.clone().unwrap_or_default()
    }
}

/// Apply `Some` flag values onto a config field.
pub fn set_if<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}
