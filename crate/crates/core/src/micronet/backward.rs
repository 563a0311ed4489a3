//! Reverse-mode differentiation of the forward pass.
//!
//! The filter's affinities are treated as constants, so no gradient reaches
//! the guide embedding; the camera encoder still receives gradient from the
//! LiDAR stream through the per-stage mapping layers.

use num_traits::Float;

use crate::tensor::Tensor;
use crate::treefilter::filter_backward;

use super::conv::{leaky_relu_backward, softmax_backward, upsample2_backward};
use super::forward::ForwardTrace;
use super::conv::{Conv2d, ConvGrads};
use super::params::{MicroNetGrads, MicroNetParams};

fn store<T: Float>(dst: &mut Conv2d<T>, g: ConvGrads<T>) {
    dst.weight = g.weight;
    dst.bias = g.bias;
}

/// Gradients of a scalar loss with respect to every parameter, given the
/// loss gradients on both stream outputs (the filtered LiDAR prediction and
/// the camera prediction).
pub fn micronet_backward<T: Float>(
    trace: &ForwardTrace<T>,
    grad_y_lidar: &Tensor<T>,
    grad_y_cam: &Tensor<T>,
    params: &MicroNetParams<T>,
) -> MicroNetGrads<T> {
    assert_eq!(grad_y_lidar.dims(), trace.y_lidar_raw.dims(), "stale trace");
    assert_eq!(grad_y_cam.dims(), trace.y_cam.dims(), "stale trace");
    let mut grads = MicroNetParams::zeros(params.n_cls);

    // ----- lidar stream -----
    let grad_raw = match &trace.tree {
        Some(tree) => filter_backward(tree, grad_y_lidar).expect("trace tree matches output"),
        None => grad_y_lidar.clone(),
    };
    let grad_logits = softmax_backward(&trace.y_lidar_raw, &grad_raw);
    let (grad_dact, head_grads) = params.lidar_head.backward(&trace.lidar_dact, &grad_logits);
    store(&mut grads.lidar_head, head_grads);
    let grad_dpre = leaky_relu_backward(&trace.lidar_dpre, &grad_dact);
    let (grad_up, dec_grads) = params.lidar_dec.backward(&trace.lidar_up, &grad_dpre);
    store(&mut grads.lidar_dec, dec_grads);
    let grad_fused2 = upsample2_backward(&grad_up);

    // fused2 = lidar_act2 + fuse2(cam_act2)
    let (grad_cam_act2_from_fuse, fuse2_grads) =
        params.fuse2.backward(&trace.cam_act2, &grad_fused2);
    store(&mut grads.fuse2, fuse2_grads);
    let grad_lidar_pre2 = leaky_relu_backward(&trace.lidar_pre2, &grad_fused2);
    let (grad_fused1, enc2_grads) = params.lidar_enc2.backward(&trace.lidar_fused1, &grad_lidar_pre2);
    store(&mut grads.lidar_enc2, enc2_grads);

    // fused1 = lidar_act1 + fuse1(cam_act1)
    let (grad_cam_act1_from_fuse, fuse1_grads) =
        params.fuse1.backward(&trace.cam_act1, &grad_fused1);
    store(&mut grads.fuse1, fuse1_grads);
    let grad_lidar_pre1 = leaky_relu_backward(&trace.lidar_pre1, &grad_fused1);
    let (_, enc1_grads) = params.lidar_enc1.backward(&trace.lidar_in, &grad_lidar_pre1);
    store(&mut grads.lidar_enc1, enc1_grads);

    // ----- camera stream -----
    let grad_cam_logits = softmax_backward(&trace.y_cam, grad_y_cam);
    let (grad_cam_dact, cam_head_grads) =
        params.cam_head.backward(&trace.cam_dact, &grad_cam_logits);
    store(&mut grads.cam_head, cam_head_grads);
    let grad_cam_dpre = leaky_relu_backward(&trace.cam_dpre, &grad_cam_dact);
    let (grad_cam_up, cam_dec_grads) = params.cam_dec.backward(&trace.cam_up, &grad_cam_dpre);
    store(&mut grads.cam_dec, cam_dec_grads);

    // cam_act2 collects gradient from its own decoder and from fuse2
    let mut grad_cam_act2 = upsample2_backward(&grad_cam_up);
    for (g, &a) in grad_cam_act2
        .data_mut()
        .iter_mut()
        .zip(grad_cam_act2_from_fuse.data())
    {
        *g = *g + a;
    }
    let grad_cam_pre2 = leaky_relu_backward(&trace.cam_pre2, &grad_cam_act2);
    let (grad_cam_act1_from_enc2, cam_enc2_grads) =
        params.cam_enc2.backward(&trace.cam_act1, &grad_cam_pre2);
    store(&mut grads.cam_enc2, cam_enc2_grads);

    // cam_act1 collects gradient from stage 2 and from fuse1; the guide
    // embedding contributes nothing by construction
    let mut grad_cam_act1 = grad_cam_act1_from_enc2;
    for (g, &a) in grad_cam_act1
        .data_mut()
        .iter_mut()
        .zip(grad_cam_act1_from_fuse.data())
    {
        *g = *g + a;
    }
    let grad_cam_pre1 = leaky_relu_backward(&trace.cam_pre1, &grad_cam_act1);
    let (_, cam_enc1_grads) = params.cam_enc1.backward(&trace.cam_in, &grad_cam_pre1);
    store(&mut grads.cam_enc1, cam_enc1_grads);

    grads
}
