//! Dataset generation and loading.
//!
//! Layout per sample under the output directory:
//!
//! ```text
//! sample_0000/
//!   image.mmtf      3 x H x W float32 camera image
//!   cloud.mmtf      N x 4 float32 (x, y, z, r) sensor-frame points
//!   labels3d.mmtf   N uint16 per-point classes
//!   label2d.mmtf    H x W uint16 dense labels (evaluation only)
//!   label_p3d.mmtf  H x W uint16 sparse projected labels, IGNORE elsewhere
//!   camera.txt      key=value camera intrinsics/extrinsics
//! manifest.txt      relative path + 64-bit FNV-1a content hash per file
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::mmtf::{read_tensor, write_tensor};
use crate::projection::{project_points, sparse_label_map, CameraModel, PointCloud};
use crate::rng::Rng;
use crate::tensor::Tensor;

use super::render::{render_camera, simulate_lidar, LidarRig};
use super::scene::{generate_scene, SceneGenConfig};

pub const DEFAULT_WIDTH: usize = 96;
pub const DEFAULT_HEIGHT: usize = 64;

// camera pose relative to the lidar: 20 cm forward, 20 cm down, with a small
// yaw and upward pitch so the two sensors are deliberately misaligned
const CAM_POS_IN_LIDAR: [f64; 3] = [0.2, 0.0, -0.2];
const CAM_YAW_DEG: f64 = 2.0;
const CAM_PITCH_DEG: f64 = -5.0;

fn matmul3(a: &[f64; 9], b: &[f64; 9]) -> [f64; 9] {
    let mut out = [0.0; 9];
    for i in 0..3 {
        for j in 0..3 {
            out[i * 3 + j] = (0..3).map(|k| a[i * 3 + k] * b[k * 3 + j]).sum();
        }
    }
    out
}

fn transpose3(a: &[f64; 9]) -> [f64; 9] {
    [a[0], a[3], a[6], a[1], a[4], a[7], a[2], a[5], a[8]]
}

fn rot_z(angle: f64) -> [f64; 9] {
    let (s, c) = angle.sin_cos();
    [c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0]
}

fn rot_y(angle: f64) -> [f64; 9] {
    let (s, c) = angle.sin_cos();
    [c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c]
}

/// Default pinhole camera: forward-looking with a slight yaw and upward
/// pitch, principal point at the image center.
pub fn default_camera(width: usize, height: usize) -> CameraModel {
    // base axes: camera right = -y, down = -z, forward = +x (lidar frame)
    let base = [0.0, -1.0, 0.0, 0.0, 0.0, -1.0, 1.0, 0.0, 0.0];
    let rig = matmul3(&rot_z(CAM_YAW_DEG.to_radians()), &rot_y(CAM_PITCH_DEG.to_radians()));
    let rotation = matmul3(&base, &transpose3(&rig));
    let t = [
        -(rotation[0] * CAM_POS_IN_LIDAR[0]
            + rotation[1] * CAM_POS_IN_LIDAR[1]
            + rotation[2] * CAM_POS_IN_LIDAR[2]),
        -(rotation[3] * CAM_POS_IN_LIDAR[0]
            + rotation[4] * CAM_POS_IN_LIDAR[1]
            + rotation[5] * CAM_POS_IN_LIDAR[2]),
        -(rotation[6] * CAM_POS_IN_LIDAR[0]
            + rotation[7] * CAM_POS_IN_LIDAR[1]
            + rotation[8] * CAM_POS_IN_LIDAR[2]),
    ];
    let f = 0.60 * width as f64;
    CameraModel {
        fx: f,
        fy: f,
        cx: (width as f64 - 1.0) / 2.0,
        cy: (height as f64 - 1.0) / 2.0,
        rotation,
        translation: t,
        width,
        height,
    }
}

/// 64-bit FNV-1a content hash.
pub fn content_hash(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Relative path plus content hash for every file under a directory.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Manifest {
    pub entries: Vec<(String, u64)>,
}

impl Manifest {
    pub fn to_text(&self) -> String {
        self.entries
            .iter()
            .map(|(path, hash)| format!("{path} {hash:016x}\n"))
            .collect()
    }

    pub fn parse(text: &str) -> Result<Manifest> {
        let mut entries = Vec::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (path, hash) = line
                .rsplit_once(' ')
                .ok_or_else(|| Error::InvalidInput(format!("bad manifest line: {line}")))?;
            let hash = u64::from_str_radix(hash, 16)
                .map_err(|_| Error::InvalidInput(format!("bad manifest hash: {line}")))?;
            entries.push((path.to_string(), hash));
        }
        Ok(Manifest { entries })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Manifest> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<String>) -> Result<()> {
    let iter = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in iter {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        if path.is_dir() {
            collect_files(root, &path, out)?;
        } else {
            let rel = path
                .strip_prefix(root)
                .expect("walked path under root")
                .components()
                .map(|c| c.as_os_str().to_string_lossy())
                .collect::<Vec<_>>()
                .join("/");
            if rel != "manifest.txt" {
                out.push(rel);
            }
        }
    }
    Ok(())
}

/// Hashes every file under `dir` (sorted relative paths, `manifest.txt`
/// excluded) and writes the result to `dir/manifest.txt`.
pub fn write_dir_manifest(dir: impl AsRef<Path>) -> Result<Manifest> {
    let dir = dir.as_ref();
    let mut files = Vec::new();
    collect_files(dir, dir, &mut files)?;
    files.sort();
    let mut entries = Vec::with_capacity(files.len());
    for rel in files {
        let full = dir.join(&rel);
        let bytes = fs::read(&full).map_err(|e| Error::io(&full, e))?;
        entries.push((rel, content_hash(&bytes)));
    }
    let manifest = Manifest { entries };
    fs::write(dir.join("manifest.txt"), manifest.to_text())
        .map_err(|e| Error::io(dir.join("manifest.txt"), e))?;
    Ok(manifest)
}

/// Generates `n_scenes` samples under `out_dir` and writes the manifest.
/// Every sample derives its own generator streams from `(seed, index)`, so
/// the output is a pure function of the arguments.
pub fn make_dataset(
    n_scenes: usize,
    seed: u64,
    out_dir: impl AsRef<Path>,
    width: usize,
    height: usize,
    cfg: &SceneGenConfig,
) -> Result<Manifest> {
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let cam = default_camera(width, height);
    let rig = LidarRig::covering(&cam);

    for i in 0..n_scenes {
        let scene = generate_scene(Rng::substream(seed, 2 * i as u64), cfg)?;
        let (image, label2d) =
            render_camera(&scene, &cam, Rng::substream(seed, 2 * i as u64 + 1));
        let (cloud, labels3d) = simulate_lidar(&scene, &rig)?;
        let (_, index) = project_points(&cloud, &cam)?;
        let label_p3d = sparse_label_map(&index, &labels3d)?;

        let dir = out_dir.join(format!("sample_{i:04}"));
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        write_tensor(&image, dir.join("image.mmtf"))?;
        write_tensor(&cloud.to_tensor(), dir.join("cloud.mmtf"))?;
        write_tensor(
            &Tensor::new(vec![labels3d.len()], labels3d.clone())?,
            dir.join("labels3d.mmtf"),
        )?;
        write_tensor(&label2d, dir.join("label2d.mmtf"))?;
        write_tensor(&label_p3d, dir.join("label_p3d.mmtf"))?;
        cam.write_text(dir.join("camera.txt"))?;
    }
    write_dir_manifest(out_dir)
}

/// One sample read back from disk.
#[derive(Clone, Debug)]
pub struct LoadedSample {
    pub image: Tensor<f32>,
    pub cloud: PointCloud,
    pub labels3d: Vec<u16>,
    pub label2d: Tensor<u16>,
    pub label_p3d: Tensor<u16>,
    pub camera: CameraModel,
}

pub fn load_sample(dir: impl AsRef<Path>) -> Result<LoadedSample> {
    let dir = dir.as_ref();
    Ok(LoadedSample {
        image: read_tensor(dir.join("image.mmtf"))?.into_f32()?,
        cloud: PointCloud::from_tensor(&read_tensor(dir.join("cloud.mmtf"))?.into_f32()?)?,
        labels3d: read_tensor(dir.join("labels3d.mmtf"))?.into_u16()?.into_data(),
        label2d: read_tensor(dir.join("label2d.mmtf"))?.into_u16()?,
        label_p3d: read_tensor(dir.join("label_p3d.mmtf"))?.into_u16()?,
        camera: CameraModel::read_text(dir.join("camera.txt"))?,
    })
}

/// Sample directories under a dataset root, sorted by name.
pub fn list_samples(data_dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let data_dir = data_dir.as_ref();
    let iter = fs::read_dir(data_dir).map_err(|e| Error::io(data_dir, e))?;
    let mut dirs: Vec<PathBuf> = iter
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| {
            p.is_dir()
                && p.file_name()
                    .map(|n| n.to_string_lossy().starts_with("sample_"))
                    .unwrap_or(false)
        })
        .collect();
    dirs.sort();
    if dirs.is_empty() {
        return Err(Error::InvalidInput(format!(
            "no sample_* directories under {}",
            data_dir.display()
        )));
    }
    Ok(dirs)
}
