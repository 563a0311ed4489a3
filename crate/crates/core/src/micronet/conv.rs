//! Convolution, activation and resampling primitives with hand-written
//! backward passes.

use num_traits::Float;

use crate::tensor::{softmax_channels, Tensor};

/// LeakyReLU negative slope used throughout the network.
pub const LEAKY_SLOPE: f64 = 0.01;

/// Square-kernel 2D convolution over `(C, H, W)` tensors.
#[derive(Clone, Debug)]
pub struct Conv2d<T> {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
    /// `[out, in, k, k]` row-major.
    pub weight: Tensor<T>,
    pub bias: Vec<T>,
}

/// Per-layer parameter gradients.
#[derive(Clone, Debug)]
pub struct ConvGrads<T> {
    pub weight: Tensor<T>,
    pub bias: Vec<T>,
}

/// Output index range `[lo, hi)` for which `o*stride + k - padding` lands
/// inside `[0, in_extent)`.
fn valid_range(
    out_extent: usize,
    in_extent: usize,
    k: usize,
    padding: usize,
    stride: usize,
) -> (usize, usize) {
    let lo = if k >= padding {
        0
    } else {
        (padding - k).div_ceil(stride)
    };
    if in_extent + padding <= k {
        return (0, 0);
    }
    let hi = ((in_extent - 1 + padding - k) / stride + 1).min(out_extent);
    (lo.min(hi), hi)
}

impl<T: Float> Conv2d<T> {
    pub fn zeros(
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
    ) -> Self {
        Conv2d {
            in_channels,
            out_channels,
            kernel,
            stride,
            padding,
            weight: Tensor::filled(
                vec![out_channels, in_channels, kernel, kernel],
                T::zero(),
            ),
            bias: vec![T::zero(); out_channels],
        }
    }

    pub fn out_hw(&self, h: usize, w: usize) -> (usize, usize) {
        (
            (h + 2 * self.padding - self.kernel) / self.stride + 1,
            (w + 2 * self.padding - self.kernel) / self.stride + 1,
        )
    }

    pub fn forward(&self, input: &Tensor<T>) -> Tensor<T> {
        let (cin, h, w) = input.chw().expect("conv input must be (C,H,W)");
        assert_eq!(cin, self.in_channels, "conv input channel mismatch");
        let (oh, ow) = self.out_hw(h, w);
        let (k, s, p) = (self.kernel, self.stride, self.padding);
        let mut out = Tensor::filled(vec![self.out_channels, oh, ow], T::zero());
        let idata = input.data();
        let wdata = self.weight.data();
        let odata = out.data_mut();
        for co in 0..self.out_channels {
            let ob = co * oh * ow;
            let b = self.bias[co];
            for v in &mut odata[ob..ob + oh * ow] {
                *v = b;
            }
            for ci in 0..cin {
                let ib = ci * h * w;
                for ky in 0..k {
                    let (oy_lo, oy_hi) = valid_range(oh, h, ky, p, s);
                    for kx in 0..k {
                        let (ox_lo, ox_hi) = valid_range(ow, w, kx, p, s);
                        if ox_lo >= ox_hi {
                            continue;
                        }
                        let wv = wdata[((co * cin + ci) * k + ky) * k + kx];
                        for oy in oy_lo..oy_hi {
                            let iy = oy * s + ky - p;
                            let irow = ib + iy * w;
                            let orow = ob + oy * ow;
                            for ox in ox_lo..ox_hi {
                                let ix = ox * s + kx - p;
                                odata[orow + ox] = odata[orow + ox] + wv * idata[irow + ix];
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Gradients of a scalar loss with respect to the input and the layer
    /// parameters, given `grad_out` on the layer output and the cached
    /// forward input.
    pub fn backward(&self, input: &Tensor<T>, grad_out: &Tensor<T>) -> (Tensor<T>, ConvGrads<T>) {
        let (cin, h, w) = input.chw().expect("conv input must be (C,H,W)");
        let (oh, ow) = self.out_hw(h, w);
        debug_assert_eq!(grad_out.dims(), &[self.out_channels, oh, ow]);
        let (k, s, p) = (self.kernel, self.stride, self.padding);

        let mut grad_bias = vec![T::zero(); self.out_channels];
        for co in 0..self.out_channels {
            let ob = co * oh * ow;
            grad_bias[co] = grad_out.data()[ob..ob + oh * ow]
                .iter()
                .fold(T::zero(), |a, &g| a + g);
        }

        let mut grad_weight =
            Tensor::filled(vec![self.out_channels, cin, k, k], T::zero());
        let mut grad_input = Tensor::filled(vec![cin, h, w], T::zero());
        let idata = input.data();
        let gdata = grad_out.data();
        let wdata = self.weight.data();
        let gw = grad_weight.data_mut();
        let gi = grad_input.data_mut();
        for co in 0..self.out_channels {
            let ob = co * oh * ow;
            for ci in 0..cin {
                let ib = ci * h * w;
                for ky in 0..k {
                    let (oy_lo, oy_hi) = valid_range(oh, h, ky, p, s);
                    for kx in 0..k {
                        let (ox_lo, ox_hi) = valid_range(ow, w, kx, p, s);
                        if ox_lo >= ox_hi {
                            continue;
                        }
                        let wv = wdata[((co * cin + ci) * k + ky) * k + kx];
                        let mut acc = T::zero();
                        for oy in oy_lo..oy_hi {
                            let iy = oy * s + ky - p;
                            let irow = ib + iy * w;
                            let orow = ob + oy * ow;
                            for ox in ox_lo..ox_hi {
                                let ix = ox * s + kx - p;
                                let g = gdata[orow + ox];
                                acc = acc + g * idata[irow + ix];
                                gi[irow + ix] = gi[irow + ix] + wv * g;
                            }
                        }
                        gw[((co * cin + ci) * k + ky) * k + kx] = acc;
                    }
                }
            }
        }
        (
            grad_input,
            ConvGrads {
                weight: grad_weight,
                bias: grad_bias,
            },
        )
    }

    pub fn param_count(&self) -> usize {
        self.weight.len() + self.bias.len()
    }
}

pub fn leaky_relu<T: Float>(x: &Tensor<T>) -> Tensor<T> {
    let slope = T::from(LEAKY_SLOPE).unwrap();
    x.map(|v| if v > T::zero() { v } else { slope * v })
}

pub fn leaky_relu_backward<T: Float>(pre: &Tensor<T>, grad_out: &Tensor<T>) -> Tensor<T> {
    let slope = T::from(LEAKY_SLOPE).unwrap();
    debug_assert_eq!(pre.dims(), grad_out.dims());
    let mut out = grad_out.clone();
    for (g, &x) in out.data_mut().iter_mut().zip(pre.data()) {
        if x <= T::zero() {
            *g = *g * slope;
        }
    }
    out
}

/// Nearest-neighbor 2x upsampling.
pub fn upsample2<T: Float>(input: &Tensor<T>) -> Tensor<T> {
    let (c, h, w) = input.chw().expect("upsample input must be (C,H,W)");
    let mut out = Tensor::filled(vec![c, 2 * h, 2 * w], T::zero());
    let idata = input.data();
    let odata = out.data_mut();
    for ch in 0..c {
        for y in 0..2 * h {
            let irow = ch * h * w + (y / 2) * w;
            let orow = ch * 4 * h * w + y * 2 * w;
            for x in 0..2 * w {
                odata[orow + x] = idata[irow + x / 2];
            }
        }
    }
    out
}

/// Backward of nearest 2x upsampling: each input cell collects its 2x2 block.
pub fn upsample2_backward<T: Float>(grad_out: &Tensor<T>) -> Tensor<T> {
    let (c, h2, w2) = grad_out.chw().expect("grad must be (C,H,W)");
    let (h, w) = (h2 / 2, w2 / 2);
    let mut out = Tensor::filled(vec![c, h, w], T::zero());
    let gdata = grad_out.data();
    let odata = out.data_mut();
    for ch in 0..c {
        for y in 0..h2 {
            let orow = ch * h * w + (y / 2) * w;
            let grow = ch * h2 * w2 + y * w2;
            for x in 0..w2 {
                odata[orow + x / 2] = odata[orow + x / 2] + gdata[grow + x];
            }
        }
    }
    out
}

/// Channel softmax forward, panicking wrapper for internal wiring.
pub fn softmax<T: Float>(logits: &Tensor<T>) -> Tensor<T> {
    softmax_channels(logits).expect("softmax over valid logits")
}

/// Backward of the channel softmax: given probabilities `p` and the loss
/// gradient on them, `grad_logit_c = p_c * (grad_p_c - sum_k grad_p_k p_k)`.
pub fn softmax_backward<T: Float>(probs: &Tensor<T>, grad_probs: &Tensor<T>) -> Tensor<T> {
    let (c, h, w) = probs.chw().expect("softmax grad must be (C,H,W)");
    debug_assert_eq!(probs.dims(), grad_probs.dims());
    let hw = h * w;
    let p = probs.data();
    let gp = grad_probs.data();
    let mut out = Tensor::filled(vec![c, h, w], T::zero());
    let odata = out.data_mut();
    for px in 0..hw {
        let mut dot = T::zero();
        for ch in 0..c {
            dot = dot + gp[ch * hw + px] * p[ch * hw + px];
        }
        for ch in 0..c {
            let at = ch * hw + px;
            odata[at] = p[at] * (gp[at] - dot);
        }
    }
    out
}
