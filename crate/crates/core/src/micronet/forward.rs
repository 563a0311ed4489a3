//! Forward pass of the two-stream network.
//!
//! Encoder stage `s` computes post-activation features for both streams and
//! then updates the LiDAR feature as `F_lidar + f_map(F_cam)`; the fused
//! feature feeds the next LiDAR stage. The LiDAR decoder's softmax output is
//! optionally smoothed by the guided tree filter before leaving the network.
//! Range-valued input channels are scaled by a fixed constant so activations
//! start in a trainable range.

use num_traits::Float;

use crate::error::{Error, Result};
use crate::tensor::Tensor;
use crate::treefilter::{build_grid_graph, build_mst, filter_linear, GuideSource, SpanningTree};

use super::conv::{leaky_relu, softmax, upsample2};
use super::params::{MicroNetParams, CAM_IN_CH, LIDAR_IN_CH};

/// Fixed scale applied to the `(d, x, y, z)` channels of the LiDAR map;
/// reflectance and camera channels already live in `[0, 1]`.
pub const RANGE_SCALE: f64 = 1.0 / 20.0;

/// Which optional mechanisms a forward pass applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NetToggles {
    pub use_filter: bool,
    pub use_dycross: bool,
    pub guide_source: GuideSource,
}

impl Default for NetToggles {
    fn default() -> Self {
        NetToggles {
            use_filter: true,
            use_dycross: true,
            guide_source: GuideSource::CamLow,
        }
    }
}

/// Cached activations of one forward pass; everything the backward pass
/// needs to produce exact analytic gradients.
#[derive(Clone, Debug)]
pub struct ForwardTrace<T> {
    pub toggles: NetToggles,
    pub lidar_in: Tensor<T>,
    pub cam_in: Tensor<T>,
    pub lidar_pre1: Tensor<T>,
    pub lidar_act1: Tensor<T>,
    pub lidar_fused1: Tensor<T>,
    pub lidar_pre2: Tensor<T>,
    pub lidar_act2: Tensor<T>,
    pub lidar_fused2: Tensor<T>,
    pub cam_pre1: Tensor<T>,
    pub cam_act1: Tensor<T>,
    pub cam_pre2: Tensor<T>,
    pub cam_act2: Tensor<T>,
    pub lidar_up: Tensor<T>,
    pub lidar_dpre: Tensor<T>,
    pub lidar_dact: Tensor<T>,
    pub y_lidar_raw: Tensor<T>,
    pub cam_up: Tensor<T>,
    pub cam_dpre: Tensor<T>,
    pub cam_dact: Tensor<T>,
    pub y_cam: Tensor<T>,
    /// Spanning tree of the guide, present when the filter ran.
    pub tree: Option<SpanningTree<T>>,
}

/// Network outputs: the (optionally filtered) LiDAR prediction, the camera
/// prediction, the embedded low-level camera feature, and the trace.
pub struct ForwardOutput<T> {
    pub y_lidar: Tensor<T>,
    pub y_cam: Tensor<T>,
    pub f_cam_low: Tensor<T>,
    pub trace: ForwardTrace<T>,
}

pub fn micronet_forward<T: Float>(
    lidar_map: &Tensor<T>,
    cam_image: &Tensor<T>,
    params: &MicroNetParams<T>,
    toggles: NetToggles,
) -> Result<ForwardOutput<T>> {
    let (lc, h, w) = lidar_map.chw()?;
    let (cc, ch, cw) = cam_image.chw()?;
    if lc != LIDAR_IN_CH {
        return Err(Error::InvalidShape {
            dims: lidar_map.dims().to_vec(),
            reason: format!("lidar map must have {LIDAR_IN_CH} channels"),
        });
    }
    if cc != CAM_IN_CH {
        return Err(Error::InvalidShape {
            dims: cam_image.dims().to_vec(),
            reason: format!("camera image must have {CAM_IN_CH} channels"),
        });
    }
    if (ch, cw) != (h, w) {
        return Err(Error::ShapeMismatch(format!(
            "lidar map {h}x{w} vs camera image {ch}x{cw}"
        )));
    }
    if h % 2 != 0 || w % 2 != 0 {
        return Err(Error::InvalidInput(format!(
            "spatial dims must be divisible by 2, got {h}x{w}"
        )));
    }

    let scale = T::from(RANGE_SCALE).unwrap();
    let hw = h * w;
    let mut lidar_in = lidar_map.clone();
    for v in lidar_in.data_mut()[..4 * hw].iter_mut() {
        *v = *v * scale;
    }
    let cam_in = cam_image.clone();

    // encoders with per-stage fusion into the lidar stream
    let lidar_pre1 = params.lidar_enc1.forward(&lidar_in);
    let lidar_act1 = leaky_relu(&lidar_pre1);
    let cam_pre1 = params.cam_enc1.forward(&cam_in);
    let cam_act1 = leaky_relu(&cam_pre1);
    let mut lidar_fused1 = params.fuse1.forward(&cam_act1);
    for (f, &a) in lidar_fused1.data_mut().iter_mut().zip(lidar_act1.data()) {
        *f = *f + a;
    }

    let lidar_pre2 = params.lidar_enc2.forward(&lidar_fused1);
    let lidar_act2 = leaky_relu(&lidar_pre2);
    let cam_pre2 = params.cam_enc2.forward(&cam_act1);
    let cam_act2 = leaky_relu(&cam_pre2);
    let mut lidar_fused2 = params.fuse2.forward(&cam_act2);
    for (f, &a) in lidar_fused2.data_mut().iter_mut().zip(lidar_act2.data()) {
        *f = *f + a;
    }

    // decoders
    let lidar_up = upsample2(&lidar_fused2);
    let lidar_dpre = params.lidar_dec.forward(&lidar_up);
    let lidar_dact = leaky_relu(&lidar_dpre);
    let lidar_logits = params.lidar_head.forward(&lidar_dact);
    let y_lidar_raw = softmax(&lidar_logits);

    let cam_up = upsample2(&cam_act2);
    let cam_dpre = params.cam_dec.forward(&cam_up);
    let cam_dact = leaky_relu(&cam_dpre);
    let cam_logits = params.cam_head.forward(&cam_dact);
    let y_cam = softmax(&cam_logits);

    // low-level camera guide embedding; affinities derived from it carry no
    // gradient, so this is computed outside the differentiated graph
    let f_cam_low = leaky_relu(&params.guide_embed.forward(&cam_act1));

    let (y_lidar, tree) = if toggles.use_filter {
        let guide = match toggles.guide_source {
            GuideSource::CamLow => f_cam_low.clone(),
            GuideSource::CamImage => cam_in.clone(),
            GuideSource::CamHigh => cam_up.clone(),
            GuideSource::LidarLow => lidar_act1.clone(),
        };
        let graph = build_grid_graph(&guide)?;
        let tree = build_mst(&graph);
        (filter_linear(&tree, &y_lidar_raw)?, Some(tree))
    } else {
        (y_lidar_raw.clone(), None)
    };

    Ok(ForwardOutput {
        y_lidar,
        y_cam: y_cam.clone(),
        f_cam_low,
        trace: ForwardTrace {
            toggles,
            lidar_in,
            cam_in,
            lidar_pre1,
            lidar_act1,
            lidar_fused1,
            lidar_pre2,
            lidar_act2,
            lidar_fused2,
            cam_pre1,
            cam_act1,
            cam_pre2,
            cam_act2,
            lidar_up,
            lidar_dpre,
            lidar_dact,
            y_lidar_raw,
            cam_up,
            cam_dpre,
            cam_dact,
            y_cam,
            tree,
        },
    })
}
