//! Camera rendering and LiDAR simulation over the analytic scene.
//!
//! World coordinates: x forward, y left, z up, ground plane at z = 0. The
//! LiDAR sits at (0, 0, 1.8); its sensor frame shares the world axes, so
//! sensor-frame points are world points minus the origin. The camera is
//! described by a [`CameraModel`] whose extrinsics map the LiDAR frame to
//! the camera frame.

use crate::error::{Error, Result};
use crate::projection::{CameraModel, PointCloud};
use crate::rng::Rng;
use crate::tensor::Tensor;

use super::raycast::trace_ray;
use super::scene::{albedo_luminance, SceneSpec, CLASS_ALBEDO, CLASS_BACKGROUND};

/// LiDAR origin in world coordinates.
pub const LIDAR_ORIGIN: [f64; 3] = [0.0, 0.0, 1.8];

// fixed sun direction (pointing from the sun toward the scene) and ambient
const SUN_DIR: [f64; 3] = [0.30, -0.25, -0.92];
const AMBIENT: f64 = 0.35;
const NOISE_SIGMA: f64 = 0.02;

fn lambert(normal: [f64; 3]) -> f64 {
    let n = (SUN_DIR[0] * SUN_DIR[0] + SUN_DIR[1] * SUN_DIR[1] + SUN_DIR[2] * SUN_DIR[2]).sqrt();
    let dot = -(normal[0] * SUN_DIR[0] + normal[1] * SUN_DIR[1] + normal[2] * SUN_DIR[2]) / n;
    AMBIENT + (1.0 - AMBIENT) * dot.max(0.0)
}

/// Renders the scene from the camera: per-pixel nearest-hit ray casting,
/// Lambertian shading of class albedos, seeded Gaussian pixel noise, plus
/// the dense per-pixel class labels (class 0 where rays escape).
pub fn render_camera(
    scene: &SceneSpec,
    cam: &CameraModel,
    mut rng: Rng,
) -> (Tensor<f32>, Tensor<u16>) {
    let (h, w) = (cam.height, cam.width);
    let hw = h * w;
    let mut image = Tensor::filled(vec![3, h, w], 0.0f32);
    let mut labels = Tensor::filled(vec![h, w], CLASS_BACKGROUND);
    for row in 0..h {
        for col in 0..w {
            let (dir, center) = cam.pixel_ray(row, col);
            let origin = [
                center[0] + LIDAR_ORIGIN[0],
                center[1] + LIDAR_ORIGIN[1],
                center[2] + LIDAR_ORIGIN[2],
            ];
            let px = row * w + col;
            let (albedo, shade) = match trace_ray(scene, origin, dir, f64::MAX) {
                Some(hit) => {
                    labels.data_mut()[px] = hit.class;
                    (CLASS_ALBEDO[hit.class as usize], lambert(hit.normal))
                }
                None => (CLASS_ALBEDO[CLASS_BACKGROUND as usize], 1.0),
            };
            for ch in 0..3 {
                let noisy = albedo[ch] * shade + rng.normal() * NOISE_SIGMA;
                image.data_mut()[ch * hw + px] = noisy.clamp(0.0, 1.0) as f32;
            }
        }
    }
    (image, labels)
}

/// Beam pattern of the toy spinning LiDAR: 16 elevation rings uniform in
/// [-15 deg, +5 deg], 128 azimuth steps spanning the camera's horizontal
/// field of view, range-limited returns.
#[derive(Clone, Debug)]
pub struct LidarRig {
    /// Sensor origin in world coordinates.
    pub origin: [f64; 3],
    /// Elevation angles in radians.
    pub elevations: Vec<f64>,
    /// Azimuth angles in radians (0 along world +x).
    pub azimuths: Vec<f64>,
    /// Returns beyond this range are dropped.
    pub max_range: f64,
}

pub const RIG_ELEVATIONS: usize = 16;
pub const RIG_AZIMUTHS: usize = 128;
pub const RIG_MAX_RANGE: f64 = 15.0;

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![(lo + hi) / 2.0];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

impl LidarRig {
    /// Rig whose azimuth fan covers the camera's horizontal field of view.
    pub fn covering(cam: &CameraModel) -> LidarRig {
        // camera forward axis expressed in the lidar/world frame
        let fwd = [cam.rotation[6], cam.rotation[7], cam.rotation[8]];
        let center_az = fwd[1].atan2(fwd[0]);
        let half_fov = (cam.cx.max(cam.width as f64 - 1.0 - cam.cx) / cam.fx).atan();
        LidarRig {
            origin: LIDAR_ORIGIN,
            elevations: linspace(
                -15.0f64.to_radians(),
                5.0f64.to_radians(),
                RIG_ELEVATIONS,
            ),
            azimuths: linspace(
                center_az - half_fov,
                center_az + half_fov,
                RIG_AZIMUTHS,
            ),
            max_range: RIG_MAX_RANGE,
        }
    }

    pub fn ray_count(&self) -> usize {
        self.elevations.len() * self.azimuths.len()
    }
}

/// Casts every rig beam: one point per ray that hits geometry within range,
/// in the sensor frame, with the hit class's albedo luminance as
/// reflectance. Returns the cloud and per-point class labels.
pub fn simulate_lidar(scene: &SceneSpec, rig: &LidarRig) -> Result<(PointCloud, Vec<u16>)> {
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for &elevation in &rig.elevations {
        let (sin_e, cos_e) = elevation.sin_cos();
        for &azimuth in &rig.azimuths {
            let (sin_a, cos_a) = azimuth.sin_cos();
            let dir = [cos_e * cos_a, cos_e * sin_a, sin_e];
            if let Some(hit) = trace_ray(scene, rig.origin, dir, rig.max_range) {
                points.push([
                    hit.t * dir[0],
                    hit.t * dir[1],
                    hit.t * dir[2],
                    albedo_luminance(hit.class),
                ]);
                labels.push(hit.class);
            }
        }
    }
    if points.is_empty() {
        return Err(Error::DegenerateScene);
    }
    Ok((PointCloud { points }, labels))
}
