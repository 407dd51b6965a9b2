//! The JSON run configuration shared by `extract`, `train` and `predict`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::features::FeatureConfig;
use crate::neural::{ModelConfig, Task, TrainConfig};

/// Which feature levels feed the model:
/// `word`, `utterance` and any number of named embedding sources.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureFlags {
    pub word: bool,
    pub utterance: bool,
    pub embeddings: Vec<String>,
}

impl Default for FeatureFlags {
    fn default() -> Self {
        FeatureFlags {
            word: true,
            utterance: true,
            embeddings: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    #[default]
    Full,
    Desk,
}

/// Optional overrides on top of the preset.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DimOverrides {
    pub word_hidden: Option<usize>,
    pub lstm_layers: Option<usize>,
    pub ple_bins: Option<usize>,
    pub utterance_hidden: Option<usize>,
    pub pool_hidden: Option<usize>,
    pub latent_len: Option<usize>,
    pub latent_dim: Option<usize>,
    pub ff_hidden: Option<usize>,
    pub perceiver_passes: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub task: Option<Task>,
    pub features: FeatureFlags,
    pub preset: Preset,
    pub dims: DimOverrides,
    pub train: TrainConfig,
    /// Train on normalised vote distributions where votes exist.
    pub soft_labels: bool,
    pub extraction: FeatureConfig,
    pub syntax_sidecar: Option<PathBuf>,
    pub sentiment_sidecar: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
    pub cache: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub history: Option<PathBuf>,
    pub workers: Option<usize>,
}

impl RunConfig {
    /// Reads a config; relative paths inside it resolve against its directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
        let mut cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [
            &mut cfg.syntax_sidecar,
            &mut cfg.sentiment_sidecar,
            &mut cfg.manifest,
            &mut cfg.cache,
            &mut cfg.checkpoint,
            &mut cfg.history,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn task(&self) -> Task {
        self.task.unwrap_or(Task::Categorical)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let f = &self.features;
        if !f.word && !f.utterance && f.embeddings.is_empty() {
            return Err(CliError::Validation("at least one feature level must be enabled".into()));
        }
        if self.workers == Some(0) {
            return Err(CliError::Validation("workers must be positive".into()));
        }
        Ok(())
    }

    /// The model architecture for the given utterance width and sources.
    pub fn model_config(&self, utterance_dim: usize, sources: Vec<(String, usize)>) -> ModelConfig {
        let base = match self.preset {
            Preset::Full => ModelConfig::full(self.task(), utterance_dim, sources),
            Preset::Desk => ModelConfig::desk(self.task(), utterance_dim, sources),
        };
        let d = &self.dims;
        ModelConfig {
            use_word: self.features.word,
            utterance_dim: if self.features.utterance { utterance_dim } else { 0 },
            word_hidden: d.word_hidden.unwrap_or(base.word_hidden),
            lstm_layers: d.lstm_layers.unwrap_or(base.lstm_layers),
            ple_bins: d.ple_bins.unwrap_or(base.ple_bins),
            utterance_hidden: d.utterance_hidden.unwrap_or(base.utterance_hidden),
            pool_hidden: d.pool_hidden.unwrap_or(base.pool_hidden),
            latent_len: d.latent_len.unwrap_or(base.latent_len),
            latent_dim: d.latent_dim.unwrap_or(base.latent_dim),
            ff_hidden: d.ff_hidden.unwrap_or(base.ff_hidden),
            perceiver_passes: d.perceiver_passes.unwrap_or(base.perceiver_passes),
            ..base
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_json_uses_defaults() {
        let cfg: RunConfig = serde_json::from_str(r#"{"task": "attributes", "preset": "desk"}"#).unwrap();
        assert_eq!(cfg.task(), Task::Attributes);
        assert!(cfg.features.word && cfg.features.utterance);
        assert_eq!(cfg.train.epochs, 50);
        let m = cfg.model_config(7, vec![]);
        assert_eq!((m.word_hidden, m.utterance_dim), (16, 7));
    }

    #[test]
    fn unknown_keys_and_empty_levels_are_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"tsak": "attributes"}"#).is_err());
        let cfg: RunConfig = serde_json::from_str(r#"{"features": {"word": false, "utterance": false}}"#).unwrap();
        assert!(cfg.validate().is_err());
    }
}
