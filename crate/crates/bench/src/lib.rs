//! Shared input builders for the benchmark targets.

use mmseg_core::projection::PointCloud;
use mmseg_core::rng::Rng;
use mmseg_core::synthdata::{
    default_camera, generate_scene, render_camera, simulate_lidar, LidarRig, SceneGenConfig,
};
use mmseg_core::tensor::Tensor;

/// Random guide features with moderate contrast.
pub fn guide(seed: u64, c: usize, h: usize, w: usize) -> Tensor<f32> {
    let mut rng = Rng::new(seed);
    Tensor::new(
        vec![c, h, w],
        (0..c * h * w)
            .map(|_| rng.range_f64(0.0, 2.0) as f32)
            .collect(),
    )
    .unwrap()
}

/// Random probability-like signal.
pub fn signal(seed: u64, c: usize, h: usize, w: usize) -> Tensor<f32> {
    let mut rng = Rng::new(seed);
    Tensor::new(
        vec![c, h, w],
        (0..c * h * w).map(|_| rng.next_f32()).collect(),
    )
    .unwrap()
}

/// A full synthetic sample at the default training resolution.
pub fn sample(seed: u64, w: usize, h: usize) -> (PointCloud, Tensor<f32>) {
    let cam = default_camera(w, h);
    let rig = LidarRig::covering(&cam);
    let scene = generate_scene(Rng::new(seed), &SceneGenConfig::default()).unwrap();
    let (image, _) = render_camera(&scene, &cam, Rng::new(seed + 1));
    let (cloud, _) = simulate_lidar(&scene, &rig).unwrap();
    (cloud, image)
}
