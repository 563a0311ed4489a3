//! Run configuration: a strict JSON document of hyperparameters and toggles.
//! Unknown keys are rejected; every run writes its resolved configuration
//! next to its outputs for auditability.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use mmseg_core::losses::DycrossConfig;
use mmseg_core::micronet::{NetToggles, TrainConfig};
use mmseg_core::treefilter::GuideSource;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub schema_version: u32,
    pub seed: u64,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr0: f64,
    pub warmup_fraction: f64,
    pub momentum: f64,
    pub n_cls: usize,
    pub tau_start: f64,
    pub tau_end: f64,
    pub alpha: f64,
    pub kl_epsilon: f64,
    pub focal_gamma: f64,
    pub use_filter: bool,
    pub use_dycross: bool,
    pub guide_source: String,
    /// Seeds used by the ablation grid.
    pub ablate_seeds: usize,
    /// Optional dataset path; command-line flags take precedence.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data_dir: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let train = TrainConfig::default();
        let dycross = DycrossConfig::default();
        RunConfig {
            schema_version: 1,
            seed: train.seed,
            epochs: train.epochs,
            batch_size: train.batch_size,
            lr0: train.lr0,
            warmup_fraction: train.warmup_fraction,
            momentum: train.momentum,
            n_cls: train.n_cls,
            tau_start: dycross.tau_start,
            tau_end: dycross.tau_end,
            alpha: dycross.alpha,
            kl_epsilon: dycross.kl_epsilon,
            focal_gamma: dycross.focal_gamma,
            use_filter: true,
            use_dycross: true,
            guide_source: GuideSource::CamLow.as_str().to_string(),
            ablate_seeds: 3,
            data_dir: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != 1 {
            bail!("unsupported config schema_version {}", self.schema_version);
        }
        self.guide()?;
        self.to_train_config()
            .validate()
            .context("invalid configuration")?;
        Ok(())
    }

    pub fn guide(&self) -> Result<GuideSource> {
        GuideSource::parse(&self.guide_source).ok_or_else(|| {
            anyhow::anyhow!(
                "unknown guide source {:?} (expected cam-low, cam-image, cam-high or lidar-low)",
                self.guide_source
            )
        })
    }

    pub fn toggles(&self) -> NetToggles {
        NetToggles {
            use_filter: self.use_filter,
            use_dycross: self.use_dycross,
            guide_source: self.guide().expect("validated guide source"),
        }
    }

    pub fn to_train_config(&self) -> TrainConfig {
        TrainConfig {
            lr0: self.lr0,
            warmup_fraction: self.warmup_fraction,
            epochs: self.epochs,
            batch_size: self.batch_size,
            seed: self.seed,
            momentum: self.momentum,
            n_cls: self.n_cls,
            toggles: NetToggles {
                use_filter: self.use_filter,
                use_dycross: self.use_dycross,
                guide_source: self.guide().unwrap_or(GuideSource::CamLow),
            },
            dycross: DycrossConfig {
                tau_start: self.tau_start,
                tau_end: self.tau_end,
                alpha: self.alpha,
                kl_epsilon: self.kl_epsilon,
                focal_gamma: self.focal_gamma,
            },
        }
    }

    /// Pretty JSON for the resolved-config artifact.
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("config serializes");
        text.push('\n');
        text
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json())
            .with_context(|| format!("writing config {}", path.display()))
    }
}
