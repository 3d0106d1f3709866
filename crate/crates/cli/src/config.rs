//! JSON run configuration. Every field is optional; command-line flags
//! override whatever the file sets.

use std::path::{Path, PathBuf};

use radioclass::augment::AugmentConfig;
use radioclass::denoise::DenoiseConfig;
use radioclass::models::Hyper;
use radioclass::{Error, Result};
use serde::{Deserialize, Serialize};

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub corpus_dir: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub models: Option<Vec<String>>,
    pub pipelines: Option<Vec<String>>,
    pub variant: Option<String>,
    pub seed: Option<u64>,
    pub train_frac: Option<f64>,
    pub denoise: Option<DenoiseSettings>,
    pub augment: Option<AugmentConfig>,
    pub hyper: Option<Hyper>,
    pub asr: Option<AsrSettings>,
    pub strict: Option<bool>,
    pub test_noise: Option<f64>,
    pub repeats: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DenoiseSettings {
    pub enabled: bool,
    pub noise_frames: usize,
    pub smooth_width: usize,
}

impl Default for DenoiseSettings {
    fn default() -> Self {
        let d = DenoiseConfig::default();
        DenoiseSettings {
            enabled: true,
            noise_frames: d.noise_frames,
            smooth_width: d.smooth_width,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AsrSettings {
    /// `sidecar` or `http`.
    pub provider: Option<String>,
    pub endpoint: Option<String>,
    pub timeout_ms: Option<u64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
    }

    pub fn seed(&self, flag: Option<u64>) -> u64 {
        flag.or(self.seed).unwrap_or(DEFAULT_SEED)
    }
}

/// Flag value if given, else the config value.
pub fn pick<T: Clone>(flag: Option<T>, file: &Option<T>) -> Option<T> {
    flag.or_else(|| file.clone())
}

pub fn require<T>(v: Option<T>, name: &str) -> Result<T> {
    v.ok_or_else(|| Error::InvalidConfig(format!("missing required setting `{name}`")))
}
