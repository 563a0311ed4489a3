//! Deterministic synthetic camera+LiDAR scenes: dense 2D labels from the
//! renderer, sparse projected 3D labels from the simulated beams. Scene
//! generation and rendering are pure functions of `(seed, config)`; each
//! dataset sample owns generator substreams derived from the dataset seed
//! and its index.

mod dataset;
mod raycast;
mod render;
mod scene;

pub use dataset::{
    content_hash, default_camera, list_samples, load_sample, make_dataset, write_dir_manifest,
    LoadedSample, Manifest, DEFAULT_HEIGHT, DEFAULT_WIDTH,
};
pub use raycast::{trace_ray, Hit};
pub use render::{
    render_camera, simulate_lidar, LidarRig, LIDAR_ORIGIN, RIG_AZIMUTHS, RIG_ELEVATIONS,
    RIG_MAX_RANGE,
};
pub use scene::{
    albedo_luminance, generate_scene, Primitive, SceneGenConfig, SceneSpec, CLASS_ALBEDO,
    CLASS_BACKGROUND, CLASS_GROUND, CLASS_PEDESTRIAN, CLASS_POLE, CLASS_VEHICLE, N_CLASSES,
};
