//! `train` subcommand.

use std::path::Path;

use anyhow::{Context, Result};

use mmseg_core::micronet::{metrics_to_csv, save_checkpoint, train};
use mmseg_core::synthdata::write_dir_manifest;

use crate::config::RunConfig;

use super::load_train_samples;

pub fn run(cfg: &RunConfig, data: &Path, out: &Path) -> Result<()> {
    cfg.validate()?;
    let samples = load_train_samples(data)?;
    println!(
        "training on {} samples for {} epochs (filter={}, dycross={}, guide={})",
        samples.len(),
        cfg.epochs,
        cfg.use_filter,
        cfg.use_dycross,
        cfg.guide_source
    );
    let train_cfg = cfg.to_train_config();
    let (params, log) = train(&samples, &train_cfg)?;

    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    cfg.write(&out.join("config.json"))?;
    save_checkpoint(out.join("checkpoint"), &params)?;
    std::fs::write(out.join("metrics.csv"), metrics_to_csv(&log))
        .context("writing metrics.csv")?;
    write_dir_manifest(out)?;

    if let Some(last) = log.last() {
        println!(
            "final step {}: total {:.6} (foc_l {:.4}, lov_l {:.4}, foc_c {:.4}, lov_c {:.4}, dycross {:.4})",
            last.step, last.total, last.l_foc_lidar, last.l_lov_lidar, last.l_foc_cam,
            last.l_lov_cam, last.l_dycross
        );
    }
    println!("model written to {}", out.display());
    Ok(())
}
