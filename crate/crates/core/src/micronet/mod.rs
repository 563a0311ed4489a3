//! Desk-scale two-stream encoder/decoder with stage-wise fusion, guided
//! filtering on the LiDAR stream, hand-written backprop, and the training
//! loop.

mod backward;
mod checkpoint;
mod conv;
mod forward;
mod optim;
mod params;
mod train;

pub use backward::micronet_backward;
pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use conv::{
    leaky_relu, leaky_relu_backward, softmax_backward, upsample2, upsample2_backward, Conv2d,
    ConvGrads, LEAKY_SLOPE,
};
pub use forward::{micronet_forward, ForwardOutput, ForwardTrace, NetToggles, RANGE_SCALE};
pub use optim::{learning_rate, optimizer_step};
pub use params::{
    micronet_init, MicroNetGrads, MicroNetParams, CAM_IN_CH, LAYER_NAMES, LIDAR_IN_CH, STAGE1_CH,
    STAGE2_CH,
};
pub use train::{
    metrics_to_csv, train, train_from, MetricsRow, TrainConfig, TrainSample, METRICS_CSV_HEADER,
};

use crate::error::Result;
use crate::projection::{project_points, remap_to_points, CameraModel, PointCloud};
use crate::tensor::Tensor;

/// Full inference pipeline: project the cloud, run the network (with the
/// given toggles), and remap the 2D prediction to per-point classes. Returns
/// the dense 2D prediction alongside the 3D labels; points outside the
/// frustum get the unprojected sentinel.
pub fn infer(
    params: &MicroNetParams<f32>,
    cloud: &PointCloud,
    cam_image: &Tensor<f32>,
    camera: &CameraModel,
    toggles: NetToggles,
) -> Result<(Tensor<f32>, Vec<u16>)> {
    let (lidar_map, index) = project_points(cloud, camera)?;
    let out = micronet_forward(&lidar_map, cam_image, params, toggles)?;
    let classes3d = remap_to_points(&out.y_lidar, &index)?;
    Ok((out.y_lidar, classes3d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mmtf::encode_tensor;
    use crate::rng::Rng;

    #[test]
    fn infer_is_deterministic_and_consistent_with_remap() {
        let mut rng = Rng::new(65);
        let params = micronet_init(&mut rng, 5);
        let cam = crate::synthdata::default_camera(32, 32);
        let rig = crate::synthdata::LidarRig::covering(&cam);
        let scene = crate::synthdata::generate_scene(
            Rng::new(3),
            &crate::synthdata::SceneGenConfig::default(),
        )
        .unwrap();
        let (cloud, _) = crate::synthdata::simulate_lidar(&scene, &rig).unwrap();
        let (image, _) = crate::synthdata::render_camera(&scene, &cam, Rng::new(4));

        let toggles = NetToggles::default();
        let (y2d_a, cls_a) = infer(&params, &cloud, &image, &cam, toggles).unwrap();
        let (y2d_b, cls_b) = infer(&params, &cloud, &image, &cam, toggles).unwrap();
        assert_eq!(encode_tensor(&y2d_a), encode_tensor(&y2d_b));
        assert_eq!(cls_a, cls_b);

        // remapped classes equal the argmax of the 2D prediction
        let (_, index) = project_points(&cloud, &cam).unwrap();
        let want = remap_to_points(&y2d_a, &index).unwrap();
        assert_eq!(cls_a, want);
    }
}
