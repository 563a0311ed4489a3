//! Training objective: focal and Lovász-softmax supervision on both streams
//! plus the confidence-gated cross pseudo supervision term, combined as
//! `L = L_foc^lidar + L_lov^lidar + L_foc^cam + L_lov^cam + alpha * L_dycross`.
//!
//! All losses are pure functions of their inputs and return analytic
//! gradients with respect to the prediction probabilities.

mod dycross;
mod focal;
mod lovasz;

pub use dycross::dycross_loss;
pub use focal::focal_loss;
pub use lovasz::lovasz_softmax;

use num_traits::Float;

use crate::error::{Error, Result};
use crate::labels::IGNORE;
use crate::tensor::Tensor;

/// Hyperparameters of the cross pseudo supervision term and the supervised
/// losses.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DycrossConfig {
    /// Confidence threshold at the start of training.
    pub tau_start: f64,
    /// Confidence threshold at the end of training.
    pub tau_end: f64,
    /// Weight of the cross-supervision term in the total objective.
    pub alpha: f64,
    /// Stabilizer added inside the KL log ratio.
    pub kl_epsilon: f64,
    /// Focal loss focusing exponent.
    pub focal_gamma: f64,
}

impl Default for DycrossConfig {
    fn default() -> Self {
        DycrossConfig {
            tau_start: 0.7,
            tau_end: 0.8,
            alpha: 0.5,
            kl_epsilon: 1e-8,
            focal_gamma: 2.0,
        }
    }
}

impl DycrossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.tau_start && self.tau_start <= self.tau_end && self.tau_end <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "need 0 <= tau_start <= tau_end <= 1, got {} and {}",
                self.tau_start, self.tau_end
            )));
        }
        if self.alpha < 0.0 {
            return Err(Error::InvalidInput("alpha must be >= 0".into()));
        }
        Ok(())
    }
}

pub(crate) fn check_pred_labels<T: Float>(
    pred: &Tensor<T>,
    labels: &Tensor<u16>,
) -> Result<(usize, usize, usize)> {
    let (c, h, w) = pred.chw()?;
    let (lh, lw) = labels.hw()?;
    if (lh, lw) != (h, w) {
        return Err(Error::ShapeMismatch(format!(
            "prediction is {h}x{w}, labels are {lh}x{lw}"
        )));
    }
    for &id in labels.data() {
        if id != IGNORE && id as usize >= c {
            return Err(Error::InvalidInput(format!(
                "label {id} out of range for {c} classes"
            )));
        }
    }
    Ok((c, h, w))
}

/// Per-pixel maximum predicted probability.
pub fn confidence_map<T: Float>(pred: &Tensor<T>) -> Result<Tensor<T>> {
    let (c, h, w) = pred.chw()?;
    let hw = h * w;
    let data = pred.data();
    let mut out = vec![T::zero(); hw];
    for (px, slot) in out.iter_mut().enumerate() {
        let mut best = data[px];
        for ch in 1..c {
            let v = data[ch * hw + px];
            if v > best {
                best = v;
            }
        }
        *slot = best;
    }
    Tensor::new(vec![h, w], out)
}

/// Confidence-margin gate: `W = C_sup - C_rec` where the supervising stream's
/// confidence exceeds both the receiving stream's confidence and `tau`, zero
/// elsewhere.
pub fn dynamic_weight<T: Float>(
    c_sup: &Tensor<T>,
    c_rec: &Tensor<T>,
    tau: T,
) -> Result<Tensor<T>> {
    let (h, w) = c_sup.hw()?;
    if c_rec.hw()? != (h, w) {
        return Err(Error::ShapeMismatch(
            "confidence maps differ in shape".into(),
        ));
    }
    let data = c_sup
        .data()
        .iter()
        .zip(c_rec.data())
        .map(|(&sup, &rec)| {
            if sup > rec.max(tau) {
                sup - rec
            } else {
                T::zero()
            }
        })
        .collect();
    Tensor::new(vec![h, w], data)
}

/// Pointwise KL divergence `sum_c p_c * log((p_c + eps) / (q_c + eps))`.
pub fn kl_pixel<T: Float>(p: &[T], q: &[T], eps: T) -> T {
    p.iter()
        .zip(q)
        .fold(T::zero(), |acc, (&pc, &qc)| {
            acc + pc * ((pc + eps) / (qc + eps)).ln()
        })
}

/// Linear ramp of the confidence threshold over training progress. Progress
/// outside `[0, 1]` is clamped with a warning.
pub fn tau_schedule(progress: f64, cfg: &DycrossConfig) -> f64 {
    let p = if (0.0..=1.0).contains(&progress) {
        progress
    } else {
        log::warn!("training progress {progress} outside [0, 1], clamping");
        progress.clamp(0.0, 1.0)
    };
    cfg.tau_start + p * (cfg.tau_end - cfg.tau_start)
}

/// Every term of the training objective plus gradients for both streams.
#[derive(Clone, Debug)]
pub struct TotalLoss<T> {
    pub total: T,
    pub focal_lidar: T,
    pub lovasz_lidar: T,
    pub focal_cam: T,
    pub lovasz_cam: T,
    pub dycross: T,
    pub grad_lidar: Tensor<T>,
    pub grad_cam: Tensor<T>,
}

/// Full objective on one sample. When `alpha` is zero the cross-supervision
/// term is skipped entirely, so the logged total is exactly the sum of the
/// four supervised terms.
pub fn total_loss<T: Float>(
    y_lidar: &Tensor<T>,
    y_cam: &Tensor<T>,
    labels: &Tensor<u16>,
    tau: T,
    cfg: &DycrossConfig,
) -> Result<TotalLoss<T>> {
    cfg.validate()?;
    let gamma = T::from(cfg.focal_gamma).unwrap();
    let alpha = T::from(cfg.alpha).unwrap();

    let (focal_lidar, g_foc_l) = focal_loss(y_lidar, labels, gamma)?;
    let (lovasz_lidar, g_lov_l) = lovasz_softmax(y_lidar, labels)?;
    let (focal_cam, g_foc_c) = focal_loss(y_cam, labels, gamma)?;
    let (lovasz_cam, g_lov_c) = lovasz_softmax(y_cam, labels)?;

    let mut grad_lidar = g_foc_l;
    for (g, &a) in grad_lidar.data_mut().iter_mut().zip(g_lov_l.data()) {
        *g = *g + a;
    }
    let mut grad_cam = g_foc_c;
    for (g, &a) in grad_cam.data_mut().iter_mut().zip(g_lov_c.data()) {
        *g = *g + a;
    }

    let supervised = focal_lidar + lovasz_lidar + focal_cam + lovasz_cam;
    let mut dycross = T::zero();
    if alpha > T::zero() {
        let (d, g_dl, g_dc) = dycross_loss(y_lidar, y_cam, tau, T::from(cfg.kl_epsilon).unwrap())?;
        dycross = d;
        for (g, &a) in grad_lidar.data_mut().iter_mut().zip(g_dl.data()) {
            *g = *g + alpha * a;
        }
        for (g, &a) in grad_cam.data_mut().iter_mut().zip(g_dc.data()) {
            *g = *g + alpha * a;
        }
    }
    let total = if alpha > T::zero() {
        supervised + alpha * dycross
    } else {
        supervised
    };
    Ok(TotalLoss {
        total,
        focal_lidar,
        lovasz_lidar,
        focal_cam,
        lovasz_cam,
        dycross,
        grad_lidar,
        grad_cam,
    })
}
