use std::path::Path;

use serde::{Deserialize, Serialize};

use super::dataset::SyntheticDataset;
use super::TrainError;
use crate::autodiff::{AdamConfig, DEFAULT_HIDDEN};
use crate::losses::{LkganParams, PenaltyConfig, RenyiganParams};

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_LATENT_DIM: usize = 8;
pub const DEFAULT_POOL_SIZE: usize = 8192;
pub const DEFAULT_EVAL_SAMPLES: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossFamily {
    Lkgan,
    Renyigan,
    /// Classical discriminator with the saturating generator objective.
    DcganBaseline,
}

impl LossFamily {
    pub fn name(self) -> &'static str {
        match self {
            LossFamily::Lkgan => "lkgan",
            LossFamily::Renyigan => "renyigan",
            LossFamily::DcganBaseline => "dcgan-baseline",
        }
    }
}

fn default_latent() -> usize {
    DEFAULT_LATENT_DIM
}
fn default_one() -> usize {
    1
}
fn default_hidden() -> usize {
    DEFAULT_HIDDEN
}
fn default_pool() -> usize {
    DEFAULT_POOL_SIZE
}
fn default_eval() -> usize {
    DEFAULT_EVAL_SAMPLES
}
fn default_true() -> bool {
    true
}

/// Complete description of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub loss_family: LossFamily,
    pub epochs: usize,
    pub batch_size: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_latent")]
    pub latent_dim: usize,
    #[serde(default = "default_one")]
    pub disc_steps_per_gen_step: usize,
    #[serde(default = "default_hidden")]
    pub hidden: usize,
    /// Number of real samples drawn once per seed; one epoch is one pass.
    #[serde(default = "default_pool")]
    pub pool_size: usize,
    /// Generated samples used for the per-epoch FID and final mode coverage.
    #[serde(default = "default_eval")]
    pub eval_samples: usize,
    /// Clamp discriminator outputs before taking logs.
    #[serde(default = "default_true")]
    pub clamp: bool,
    pub dataset: SyntheticDataset,
    #[serde(default)]
    pub optimizer: AdamConfig,
    #[serde(default)]
    pub penalty: PenaltyConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lkgan: Option<LkganParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub renyigan: Option<RenyiganParams>,
}

impl TrainConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, TrainError> {
        let config: TrainConfig = toml::from_str(text).map_err(|e| TrainError::ConfigInvalid(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self, TrainError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| TrainError::ConfigInvalid(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String, TrainError> {
        toml::to_string(self).map_err(|e| TrainError::ConfigInvalid(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |msg: String| Err(TrainError::ConfigInvalid(msg));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!(
                "schema_version: expected {SCHEMA_VERSION}, got {}",
                self.schema_version
            ));
        }
        for (key, v) in [
            ("epochs", self.epochs),
            ("batch_size", self.batch_size),
            ("latent_dim", self.latent_dim),
            ("disc_steps_per_gen_step", self.disc_steps_per_gen_step),
            ("hidden", self.hidden),
        ] {
            if v < 1 {
                return bad(format!("{key}: must be >= 1"));
            }
        }
        if self.pool_size < self.batch_size {
            return bad(format!(
                "pool_size: {} is smaller than batch_size {}",
                self.pool_size, self.batch_size
            ));
        }
        if self.pool_size / self.batch_size < self.disc_steps_per_gen_step {
            return bad(format!(
                "disc_steps_per_gen_step: {} exceeds the {} batches in one epoch",
                self.disc_steps_per_gen_step,
                self.pool_size / self.batch_size
            ));
        }
        if self.eval_samples < self.dataset.dim() + 1 {
            return bad(format!("eval_samples: need at least {}", self.dataset.dim() + 1));
        }
        self.dataset.validate()?;
        self.optimizer
            .validate()
            .map_err(|e| TrainError::ConfigInvalid(format!("optimizer: {e}")))?;
        self.penalty
            .validate()
            .map_err(|e| TrainError::ConfigInvalid(format!("penalty: {e}")))?;
        match self.loss_family {
            LossFamily::Lkgan => {
                if self.lkgan.is_none() {
                    return bad("lkgan: table required when loss_family = \"lkgan\"".into());
                }
                if self.renyigan.is_some() {
                    return bad("renyigan: not allowed when loss_family = \"lkgan\"".into());
                }
            }
            LossFamily::Renyigan => {
                if self.renyigan.is_none() {
                    return bad("renyigan: table required when loss_family = \"renyigan\"".into());
                }
                if self.lkgan.is_some() {
                    return bad("lkgan: not allowed when loss_family = \"renyigan\"".into());
                }
            }
            LossFamily::DcganBaseline => {
                if self.lkgan.is_some() || self.renyigan.is_some() {
                    return bad("dcgan-baseline takes neither an lkgan nor a renyigan table".into());
                }
            }
        }
        Ok(())
    }
}
