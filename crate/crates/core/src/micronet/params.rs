//! Network parameters: layer wiring, initialization and flat views.

use num_traits::Float;

use crate::rng::Rng;

use super::conv::Conv2d;

pub const LIDAR_IN_CH: usize = 5;
pub const CAM_IN_CH: usize = 3;
pub const STAGE1_CH: usize = 16;
pub const STAGE2_CH: usize = 32;

/// Two-stream encoder/decoder weights. Both encoders have a stride-1 and a
/// stride-2 3x3 stage; per-stage 1x1 mapping layers add camera features into
/// the LiDAR stream; a 1x1 embedding produces the low-level camera guide;
/// each decoder upsamples 2x (nearest) then applies a 3x3 conv and a 1x1
/// classifier head.
#[derive(Clone, Debug)]
pub struct MicroNetParams<T> {
    pub n_cls: usize,
    pub lidar_enc1: Conv2d<T>,
    pub lidar_enc2: Conv2d<T>,
    pub cam_enc1: Conv2d<T>,
    pub cam_enc2: Conv2d<T>,
    pub fuse1: Conv2d<T>,
    pub fuse2: Conv2d<T>,
    pub guide_embed: Conv2d<T>,
    pub lidar_dec: Conv2d<T>,
    pub lidar_head: Conv2d<T>,
    pub cam_dec: Conv2d<T>,
    pub cam_head: Conv2d<T>,
}

/// Fixed layer order used by initialization, checkpoints, the optimizer and
/// flat parameter views.
pub const LAYER_NAMES: [&str; 11] = [
    "lidar_enc1",
    "lidar_enc2",
    "cam_enc1",
    "cam_enc2",
    "fuse1",
    "fuse2",
    "guide_embed",
    "lidar_dec",
    "lidar_head",
    "cam_dec",
    "cam_head",
];

impl<T: Float> MicroNetParams<T> {
    /// All-zero parameter set with the standard wiring; also the shape of
    /// gradient and momentum buffers.
    pub fn zeros(n_cls: usize) -> Self {
        assert!(n_cls >= 2, "need at least 2 classes");
        MicroNetParams {
            n_cls,
            lidar_enc1: Conv2d::zeros(LIDAR_IN_CH, STAGE1_CH, 3, 1, 1),
            lidar_enc2: Conv2d::zeros(STAGE1_CH, STAGE2_CH, 3, 2, 1),
            cam_enc1: Conv2d::zeros(CAM_IN_CH, STAGE1_CH, 3, 1, 1),
            cam_enc2: Conv2d::zeros(STAGE1_CH, STAGE2_CH, 3, 2, 1),
            fuse1: Conv2d::zeros(STAGE1_CH, STAGE1_CH, 1, 1, 0),
            fuse2: Conv2d::zeros(STAGE2_CH, STAGE2_CH, 1, 1, 0),
            guide_embed: Conv2d::zeros(STAGE1_CH, STAGE1_CH, 1, 1, 0),
            lidar_dec: Conv2d::zeros(STAGE2_CH, STAGE1_CH, 3, 1, 1),
            lidar_head: Conv2d::zeros(STAGE1_CH, n_cls, 1, 1, 0),
            cam_dec: Conv2d::zeros(STAGE2_CH, STAGE1_CH, 3, 1, 1),
            cam_head: Conv2d::zeros(STAGE1_CH, n_cls, 1, 1, 0),
        }
    }

    pub fn layers(&self) -> [(&'static str, &Conv2d<T>); 11] {
        [
            ("lidar_enc1", &self.lidar_enc1),
            ("lidar_enc2", &self.lidar_enc2),
            ("cam_enc1", &self.cam_enc1),
            ("cam_enc2", &self.cam_enc2),
            ("fuse1", &self.fuse1),
            ("fuse2", &self.fuse2),
            ("guide_embed", &self.guide_embed),
            ("lidar_dec", &self.lidar_dec),
            ("lidar_head", &self.lidar_head),
            ("cam_dec", &self.cam_dec),
            ("cam_head", &self.cam_head),
        ]
    }

    pub fn layers_mut(&mut self) -> [(&'static str, &mut Conv2d<T>); 11] {
        [
            ("lidar_enc1", &mut self.lidar_enc1),
            ("lidar_enc2", &mut self.lidar_enc2),
            ("cam_enc1", &mut self.cam_enc1),
            ("cam_enc2", &mut self.cam_enc2),
            ("fuse1", &mut self.fuse1),
            ("fuse2", &mut self.fuse2),
            ("guide_embed", &mut self.guide_embed),
            ("lidar_dec", &mut self.lidar_dec),
            ("lidar_head", &mut self.lidar_head),
            ("cam_dec", &mut self.cam_dec),
            ("cam_head", &mut self.cam_head),
        ]
    }

    pub fn param_count(&self) -> usize {
        self.layers().iter().map(|(_, l)| l.param_count()).sum()
    }

    pub fn convert<U: Float>(&self) -> MicroNetParams<U> {
        let conv = |c: &Conv2d<T>| Conv2d {
            in_channels: c.in_channels,
            out_channels: c.out_channels,
            kernel: c.kernel,
            stride: c.stride,
            padding: c.padding,
            weight: c.weight.map(|v| U::from(v).unwrap()),
            bias: c.bias.iter().map(|&v| U::from(v).unwrap()).collect(),
        };
        MicroNetParams {
            n_cls: self.n_cls,
            lidar_enc1: conv(&self.lidar_enc1),
            lidar_enc2: conv(&self.lidar_enc2),
            cam_enc1: conv(&self.cam_enc1),
            cam_enc2: conv(&self.cam_enc2),
            fuse1: conv(&self.fuse1),
            fuse2: conv(&self.fuse2),
            guide_embed: conv(&self.guide_embed),
            lidar_dec: conv(&self.lidar_dec),
            lidar_head: conv(&self.lidar_head),
            cam_dec: conv(&self.cam_dec),
            cam_head: conv(&self.cam_head),
        }
    }

    /// Concatenated weights and biases in layer order.
    pub fn flatten(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.param_count());
        for (_, layer) in self.layers() {
            out.extend_from_slice(layer.weight.data());
            out.extend_from_slice(&layer.bias);
        }
        out
    }

    /// Writes a flat parameter vector back into the layer structure.
    pub fn assign_flat(&mut self, flat: &[T]) {
        assert_eq!(flat.len(), self.param_count());
        let mut off = 0;
        for (_, layer) in self.layers_mut() {
            let wn = layer.weight.len();
            layer.weight.data_mut().copy_from_slice(&flat[off..off + wn]);
            off += wn;
            let bn = layer.bias.len();
            layer.bias.copy_from_slice(&flat[off..off + bn]);
            off += bn;
        }
    }

    /// In-place `self += scale * other`, layer by layer.
    pub fn add_scaled(&mut self, other: &Self, scale: T) {
        let others = other.layers();
        for ((_, dst), (_, src)) in self.layers_mut().into_iter().zip(others) {
            for (d, &s) in dst.weight.data_mut().iter_mut().zip(src.weight.data()) {
                *d = *d + scale * s;
            }
            for (d, &s) in dst.bias.iter_mut().zip(&src.bias) {
                *d = *d + scale * s;
            }
        }
    }

    pub fn scale(&mut self, s: T) {
        for (_, layer) in self.layers_mut() {
            for v in layer.weight.data_mut() {
                *v = *v * s;
            }
            for v in &mut layer.bias {
                *v = *v * s;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers().iter().all(|(_, l)| {
            l.weight.data().iter().all(|v| v.is_finite()) && l.bias.iter().all(|v| v.is_finite())
        })
    }
}

/// Fan-in-scaled uniform initialization: weights drawn from
/// `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`, biases zero. Deterministic in the
/// generator state.
pub fn micronet_init(rng: &mut Rng, n_cls: usize) -> MicroNetParams<f32> {
    let mut params = MicroNetParams::<f32>::zeros(n_cls);
    for (_, layer) in params.layers_mut() {
        let fan_in = layer.in_channels * layer.kernel * layer.kernel;
        let bound = 1.0 / (fan_in as f64).sqrt();
        for w in layer.weight.data_mut() {
            *w = rng.range_f64(-bound, bound) as f32;
        }
        // biases stay zero
    }
    params
}

/// Per-parameter tensors produced by the backward pass; same layout as the
/// parameters themselves.
pub type MicroNetGrads<T> = MicroNetParams<T>;
