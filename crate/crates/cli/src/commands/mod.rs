//! Subcommand implementations.

pub mod ablate;
pub mod data;
pub mod evaluate;
pub mod train;

use std::path::Path;

use anyhow::{Context, Result};
use mmseg_core::micronet::TrainSample;
use mmseg_core::projection::project_points;
use mmseg_core::synthdata::{list_samples, load_sample, LoadedSample};

/// Loads every sample under a dataset directory and projects its cloud into
/// the 5-channel training input.
pub fn load_train_samples(data_dir: &Path) -> Result<Vec<TrainSample>> {
    let dirs = list_samples(data_dir).context("listing dataset samples")?;
    dirs.iter()
        .map(|dir| {
            let sample = load_sample(dir)
                .with_context(|| format!("loading sample {}", dir.display()))?;
            let (lidar_map, _) = project_points(&sample.cloud, &sample.camera)?;
            Ok(TrainSample {
                lidar_map,
                cam_image: sample.image,
                label_p3d: sample.label_p3d,
            })
        })
        .collect()
}

/// Loads every raw sample under a dataset directory (for evaluation).
pub fn load_eval_samples(data_dir: &Path) -> Result<Vec<LoadedSample>> {
    let dirs = list_samples(data_dir).context("listing dataset samples")?;
    dirs.iter()
        .map(|dir| {
            load_sample(dir).with_context(|| format!("loading sample {}", dir.display()))
        })
        .collect()
}
