//! `eval` subcommand and the shared evaluation pass.

use std::path::Path;

use anyhow::{Context, Result};

use mmseg_core::evalkit::{confusion_update, miou, results_csv, ConfusionMatrix};
use mmseg_core::micronet::{load_checkpoint, micronet_forward, MicroNetParams, NetToggles};
use mmseg_core::ppm::{export_ppm, PALETTE};
use mmseg_core::projection::{project_points, remap_to_points};
use mmseg_core::synthdata::{write_dir_manifest, LoadedSample};
use mmseg_core::tensor::Tensor;

use crate::config::RunConfig;

use super::load_eval_samples;

/// Pooled metrics over an evaluation set.
pub struct EvalSummary {
    pub per_class_2d: Vec<Option<f64>>,
    pub miou_2d: f64,
    pub per_class_2d_empty: Vec<Option<f64>>,
    pub miou_2d_empty: f64,
    pub per_class_3d: Vec<Option<f64>>,
    pub miou_3d: f64,
    pub coverage_3d: f64,
}

fn argmax_ids(pred: &Tensor<f32>) -> Tensor<u16> {
    let (c, h, w) = pred.chw().expect("prediction is (C,H,W)");
    let hw = h * w;
    let data = pred.data();
    let ids = (0..hw)
        .map(|px| {
            let mut best = (data[px], 0u16);
            for ch in 1..c {
                let v = data[ch * hw + px];
                if v > best.0 {
                    best = (v, ch as u16);
                }
            }
            best.1
        })
        .collect();
    Tensor::new(vec![h, w], ids).expect("id map shape")
}

/// Runs the full pipeline on every sample and pools dense-2D, empty-region
/// 2D and 3D confusion statistics.
pub fn evaluate_model(
    params: &MicroNetParams<f32>,
    toggles: NetToggles,
    samples: &[LoadedSample],
) -> Result<EvalSummary> {
    let n_cls = params.n_cls;
    let mut cm_2d = ConfusionMatrix::new(n_cls);
    let mut cm_empty = ConfusionMatrix::new(n_cls);
    let mut cm_3d = ConfusionMatrix::new(n_cls);

    for sample in samples {
        let (lidar_map, index) = project_points(&sample.cloud, &sample.camera)?;
        let out = micronet_forward(&lidar_map, &sample.image, params, toggles)?;
        let pred_ids = argmax_ids(&out.y_lidar);

        confusion_update(&mut cm_2d, pred_ids.data(), sample.label2d.data())?;

        let hw = pred_ids.len();
        let range = &lidar_map.data()[..hw];
        let mut masked_pred = Vec::new();
        let mut masked_true = Vec::new();
        for px in 0..hw {
            if range[px] == 0.0 {
                masked_pred.push(pred_ids.data()[px]);
                masked_true.push(sample.label2d.data()[px]);
            }
        }
        confusion_update(&mut cm_empty, &masked_pred, &masked_true)?;

        let classes3d = remap_to_points(&out.y_lidar, &index)?;
        confusion_update(&mut cm_3d, &classes3d, &sample.labels3d)?;
    }

    let (per_class_2d, miou_2d) = miou(&cm_2d)?;
    let (per_class_2d_empty, miou_2d_empty) = miou(&cm_empty)?;
    let (per_class_3d, miou_3d) = miou(&cm_3d)?;
    Ok(EvalSummary {
        per_class_2d,
        miou_2d,
        per_class_2d_empty,
        miou_2d_empty,
        per_class_3d,
        miou_3d,
        coverage_3d: cm_3d.coverage(),
    })
}

impl EvalSummary {
    pub fn csv_rows(&self) -> Vec<(String, String, f64)> {
        let mut rows = Vec::new();
        let mut push_block = |metric: &str, per_class: &[Option<f64>], mean: f64| {
            for (c, v) in per_class.iter().enumerate() {
                if let Some(v) = v {
                    rows.push((metric.to_string(), c.to_string(), *v));
                }
            }
            rows.push((metric.to_string(), "mean".to_string(), mean));
        };
        push_block("miou_2d", &self.per_class_2d, self.miou_2d);
        push_block("miou_2d_empty", &self.per_class_2d_empty, self.miou_2d_empty);
        push_block("miou_3d", &self.per_class_3d, self.miou_3d);
        rows.push(("coverage_3d".to_string(), "all".to_string(), self.coverage_3d));
        rows
    }
}

pub fn run(model: &Path, data: &Path, out: &Path) -> Result<()> {
    let cfg = RunConfig::load(&model.join("config.json"))
        .context("reading the model's resolved config")?;
    let params = load_checkpoint(model.join("checkpoint"))?;
    let samples = load_eval_samples(data)?;
    let summary = evaluate_model(&params, cfg.toggles(), &samples)?;

    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    std::fs::write(out.join("results.csv"), results_csv(&summary.csv_rows()))
        .context("writing results.csv")?;

    // render the first sample's prediction and reference for visual diffs
    if let Some(first) = samples.first() {
        let (lidar_map, _) = project_points(&first.cloud, &first.camera)?;
        let net_out = micronet_forward(&lidar_map, &first.image, &params, cfg.toggles())?;
        export_ppm(&argmax_ids(&net_out.y_lidar), &PALETTE, out.join("pred2d_0000.ppm"))?;
        export_ppm(&first.label2d, &PALETTE, out.join("label2d_0000.ppm"))?;
        export_ppm(&first.label_p3d, &PALETTE, out.join("label_p3d_0000.ppm"))?;
    }
    write_dir_manifest(out)?;

    println!(
        "2D mIoU {:.4} | empty-region 2D mIoU {:.4} | 3D mIoU {:.4} | coverage {:.4}",
        summary.miou_2d, summary.miou_2d_empty, summary.miou_3d, summary.coverage_3d
    );
    println!("results written to {}", out.display());
    Ok(())
}
