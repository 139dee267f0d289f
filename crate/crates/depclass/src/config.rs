//! Pipeline configuration: one TOML file covering paths, split ratios,
//! exclusion toggles, and per-model hyperparameter overrides. The raw file
//! text is snapshotted verbatim next to every command's outputs so a run can
//! be reproduced exactly.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::ExclusionConfig;
use crate::error::{Error, Result};
use crate::models::{ModelKind, TrainConfig};
use crate::nn::OptimizerKind;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct PathsConfig {
    pub corpus_csv: Option<PathBuf>,
    pub lexicons: Option<PathBuf>,
    pub stoplist: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub artifact_dir: Option<PathBuf>,
    pub report_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitConfig {
    pub ratios: [f64; 3],
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig { ratios: [0.7, 0.15, 0.15], seed: 42 }
    }
}

/// Optional per-model overrides applied on top of the per-kind defaults.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelOverrides {
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub dropout: Option<f64>,
    pub optimizer: Option<OptimizerKind>,
    pub learning_rate: Option<f64>,
    pub extras: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub paths: PathsConfig,
    pub split: SplitConfig,
    pub exclusions: ExclusionConfig,
    /// Keyed by model kind name ("nb", "cnn", "lstm_glove", ...).
    pub models: BTreeMap<String, ModelOverrides>,
}

impl PipelineConfig {
    /// Per-kind training config: published defaults with this file's
    /// overrides applied, seeded with `seed`.
    pub fn train_config(&self, kind: ModelKind, seed: u64) -> TrainConfig {
        let mut cfg = TrainConfig::defaults(kind);
        cfg.seed = seed;
        if let Some(ov) = self.models.get(kind.as_str()) {
            if let Some(v) = ov.epochs {
                cfg.epochs = v;
            }
            if let Some(v) = ov.batch_size {
                cfg.batch_size = v;
            }
            if let Some(v) = ov.dropout {
                cfg.dropout = v;
            }
            if let Some(v) = ov.optimizer {
                cfg.optimizer = v;
            }
            if let Some(v) = ov.learning_rate {
                cfg.learning_rate = v;
            }
            for (k, &v) in &ov.extras {
                cfg.extras.insert(k.clone(), v);
            }
        }
        cfg
    }
}

/// A parsed config together with the exact text it came from.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: PipelineConfig,
    /// Verbatim file contents (or the serialized defaults when no file was
    /// given); this is what gets snapshotted.
    pub raw: String,
}

impl LoadedConfig {
    pub fn defaults() -> LoadedConfig {
        let config = PipelineConfig::default();
        let raw = toml::to_string_pretty(&config).expect("default config serializes");
        LoadedConfig { config, raw }
    }

    pub fn load(path: &Path) -> Result<LoadedConfig> {
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config: PipelineConfig = toml::from_str(&raw)
            .map_err(|e| Error::Invalid(format!("config {}: {e}", path.display())))?;
        Ok(LoadedConfig { config, raw })
    }

    /// Write the effective config verbatim next to a command's outputs.
    pub fn snapshot(&self, out_dir: &Path) -> Result<()> {
        fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
        let path = out_dir.join("config.toml");
        fs::write(&path, &self.raw).map_err(|e| Error::io(path, e))
    }
}
