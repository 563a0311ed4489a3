//! `gen-data`, `project` and `filter` subcommands.

use std::path::Path;

use anyhow::{bail, Context, Result};

use mmseg_core::mmtf::{read_tensor, write_tensor};
use mmseg_core::ppm::{export_ppm, PALETTE};
use mmseg_core::projection::{project_points, sparse_label_map, CameraModel, PointCloud};
use mmseg_core::synthdata::{make_dataset, write_dir_manifest, SceneGenConfig};
use mmseg_core::tensor::AnyTensor;
use mmseg_core::treefilter::guided_filter;

pub fn gen_data(out: &Path, scenes: usize, seed: u64, width: usize, height: usize) -> Result<()> {
    if scenes == 0 {
        bail!("--scenes must be at least 1");
    }
    if width % 2 != 0 || height % 2 != 0 {
        bail!("--width and --height must be even");
    }
    let manifest = make_dataset(scenes, seed, out, width, height, &SceneGenConfig::default())?;
    println!(
        "wrote {scenes} samples ({} files) to {}",
        manifest.entries.len(),
        out.display()
    );
    Ok(())
}

pub fn project(sample: &Path, out: &Path) -> Result<()> {
    let cloud_tensor = read_tensor(sample.join("cloud.mmtf"))
        .context("reading cloud.mmtf")?
        .into_f32()?;
    let cloud = PointCloud::from_tensor(&cloud_tensor)?;
    let camera = CameraModel::read_text(sample.join("camera.txt"))?;
    let (lidar_map, index) = project_points(&cloud, &camera)?;

    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    write_tensor(&lidar_map, out.join("lidar_map.mmtf"))?;

    // when 3D labels are available, also emit the sparse projected label map
    let labels_path = sample.join("labels3d.mmtf");
    if labels_path.exists() {
        let labels3d = read_tensor(&labels_path)?.into_u16()?.into_data();
        let p3d = sparse_label_map(&index, &labels3d)?;
        write_tensor(&p3d, out.join("label_p3d.mmtf"))?;
        export_ppm(&p3d, &PALETTE, out.join("label_p3d.ppm"))?;
    }
    write_dir_manifest(out)?;
    println!(
        "projected {} points, {} valid, hit fraction {:.4}",
        cloud.len(),
        index.valid_count(),
        index.hit_fraction()
    );
    Ok(())
}

pub fn filter(pred: &Path, guide: &Path, out: &Path) -> Result<()> {
    let pred_tensor = read_tensor(pred).context("reading prediction tensor")?;
    let guide_tensor = read_tensor(guide).context("reading guide tensor")?;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    match (pred_tensor, guide_tensor) {
        (AnyTensor::F32(y), AnyTensor::F32(g)) => {
            let filtered = guided_filter(&y, &g)?;
            write_tensor(&filtered, out.join("filtered.mmtf"))?;
        }
        (AnyTensor::F64(y), AnyTensor::F64(g)) => {
            let filtered = guided_filter(&y, &g)?;
            write_tensor(&filtered, out.join("filtered.mmtf"))?;
        }
        (p, g) => bail!(
            "prediction ({}) and guide ({}) must both be float32 or both float64",
            p.dtype().name(),
            g.dtype().name()
        ),
    }
    write_dir_manifest(out)?;
    println!("wrote {}", out.join("filtered.mmtf").display());
    Ok(())
}
