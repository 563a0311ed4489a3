//! Checkpoint format: one MMTF tensor per parameter plus a plain-text
//! manifest of `name shape dtype` lines.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mmtf::{read_tensor, write_tensor};
use crate::tensor::Tensor;

use super::params::{MicroNetParams, LAYER_NAMES};

fn shape_string(dims: &[usize]) -> String {
    dims.iter()
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join("x")
}

/// Writes every layer's weight and bias tensors under `dir` along with
/// `manifest.txt`.
pub fn save_checkpoint(dir: impl AsRef<Path>, params: &MicroNetParams<f32>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut manifest = String::new();
    for (name, layer) in params.layers() {
        let weight_name = format!("{name}.weight");
        write_tensor(&layer.weight, dir.join(format!("{weight_name}.mmtf")))?;
        manifest.push_str(&format!(
            "{weight_name} {} float32\n",
            shape_string(layer.weight.dims())
        ));
        let bias_name = format!("{name}.bias");
        let bias = Tensor::new(vec![layer.bias.len()], layer.bias.clone())?;
        write_tensor(&bias, dir.join(format!("{bias_name}.mmtf")))?;
        manifest.push_str(&format!("{bias_name} {} float32\n", bias.len()));
    }
    fs::write(dir.join("manifest.txt"), manifest).map_err(|e| Error::io(dir, e))
}

/// Loads a checkpoint directory, validating names and shapes against the
/// fixed architecture. The class count is recovered from the LiDAR head.
pub fn load_checkpoint(dir: impl AsRef<Path>) -> Result<MicroNetParams<f32>> {
    let dir = dir.as_ref();
    let manifest_path = dir.join("manifest.txt");
    let manifest =
        fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let names: Vec<&str> = manifest
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.split_whitespace().next().unwrap_or(""))
        .collect();
    for layer in LAYER_NAMES {
        for suffix in ["weight", "bias"] {
            let want = format!("{layer}.{suffix}");
            if !names.iter().any(|&n| n == want) {
                return Err(Error::Checkpoint(format!("manifest missing {want}")));
            }
        }
    }

    let head = read_tensor(dir.join("lidar_head.weight.mmtf"))?.into_f32()?;
    let n_cls = head.dims()[0];
    if n_cls < 2 {
        return Err(Error::Checkpoint(format!(
            "lidar head declares {n_cls} classes"
        )));
    }
    let mut params = MicroNetParams::<f32>::zeros(n_cls);
    for (name, layer) in params.layers_mut() {
        let weight = read_tensor(dir.join(format!("{name}.weight.mmtf")))?.into_f32()?;
        if weight.dims() != layer.weight.dims() {
            return Err(Error::Checkpoint(format!(
                "{name}.weight has shape {}, expected {}",
                shape_string(weight.dims()),
                shape_string(layer.weight.dims())
            )));
        }
        layer.weight = weight;
        let bias = read_tensor(dir.join(format!("{name}.bias.mmtf")))?.into_f32()?;
        if bias.len() != layer.bias.len() {
            return Err(Error::Checkpoint(format!(
                "{name}.bias has {} entries, expected {}",
                bias.len(),
                layer.bias.len()
            )));
        }
        layer.bias = bias.into_data();
    }
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::super::params::micronet_init;
    use super::*;
    use crate::rng::Rng;

    #[test]
    fn checkpoint_round_trips_bit_exactly() {
        let params = micronet_init(&mut Rng::new(42), 5);
        let dir = tempfile::tempdir().unwrap();
        save_checkpoint(dir.path(), &params).unwrap();
        let loaded = load_checkpoint(dir.path()).unwrap();
        assert_eq!(loaded.n_cls, 5);
        assert_eq!(loaded.flatten(), params.flatten());
    }

    #[test]
    fn corrupt_manifest_is_detected() {
        let params = micronet_init(&mut Rng::new(1), 3);
        let dir = tempfile::tempdir().unwrap();
        save_checkpoint(dir.path(), &params).unwrap();
        std::fs::write(dir.path().join("manifest.txt"), "lidar_enc1.weight 1 float32\n")
            .unwrap();
        assert!(matches!(
            load_checkpoint(dir.path()),
            Err(Error::Checkpoint(_))
        ));
    }
}
