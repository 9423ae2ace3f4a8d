//! The shared run configuration.
//!
//! Resolution order: built-in defaults, then the TOML file passed with
//! `--config`, then command-line flags. The digest is the SHA-256 of the
//! resolved value's canonical JSON form.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::annotate::DEFAULT_AUDIO_THRESHOLD;
use crate::error::{Error, Result};
use crate::eval::{Benchmark, HeadConfig};
use crate::frontend::FrontendConfig;
use crate::models::{build_variant, NetworkSpec, Variant, VariantOptions, HEAD_WIDTH};
use crate::train::TrainConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnnotateConfig {
    pub threshold: f64,
    pub seed: u64,
}

impl Default for AnnotateConfig {
    fn default() -> Self {
        AnnotateConfig {
            threshold: DEFAULT_AUDIO_THRESHOLD,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub variant: String,
    pub width_divisor: usize,
    pub head_width: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            variant: Variant::VggishFullconv.name().into(),
            width_divisor: 1,
            head_width: HEAD_WIDTH,
        }
    }
}

impl ModelConfig {
    pub fn spec(&self) -> Result<NetworkSpec> {
        build_variant(
            self.variant.parse()?,
            VariantOptions {
                width_divisor: self.width_divisor,
                head_width: self.head_width,
            },
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub benchmark: Benchmark,
    /// Class count; inferred from the largest label id when absent.
    pub classes: Option<usize>,
    /// Overrides for the benchmark's default head settings.
    pub head: Option<HeadConfig>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            benchmark: Benchmark::Esc50,
            classes: None,
            head: None,
        }
    }
}

impl EvalConfig {
    pub fn head_config(&self) -> HeadConfig {
        self.head.clone().unwrap_or_else(|| self.benchmark.head_config())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Paths {
    pub manifest: Option<PathBuf>,
    pub audio_root: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub vocab: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Root of every derived random stream.
    pub seed: u64,
    /// Worker threads; 0 means available parallelism.
    pub workers: usize,
    pub frontend: FrontendConfig,
    pub annotate: AnnotateConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub eval: EvalConfig,
    pub paths: Paths,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            workers: 0,
            frontend: FrontendConfig::default(),
            annotate: AnnotateConfig::default(),
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            eval: EvalConfig::default(),
            paths: Paths::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::InvalidConfig(m) => Error::InvalidConfig(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    /// Checks every section, naming the offending field.
    pub fn validate(&self) -> Result<()> {
        self.frontend.validate()?;
        if !(0.0..=1.0).contains(&self.annotate.threshold) {
            return Err(Error::InvalidConfig("annotate.threshold must lie in [0, 1]".into()));
        }
        self.model.spec().map_err(|e| Error::InvalidConfig(format!("model: {e}")))?;
        self.train.validate()?;
        if let Some(h) = &self.eval.head {
            h.validate()?;
        }
        if self.eval.classes == Some(0) {
            return Err(Error::InvalidConfig("eval.classes must be positive".into()));
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes to JSON");
        Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
    }
}
