//! Multi-class focal loss `-(1 - p_t)^gamma * log(p_t)` on probabilities,
//! averaged over labeled pixels.

use num_traits::Float;

use crate::error::{Error, Result};
use crate::labels::IGNORE;
use crate::tensor::Tensor;

use super::check_pred_labels;

// probabilities can be exactly zero after filtering sparse inputs
const LOG_EPS: f64 = 1e-12;

/// Returns the scalar loss and its gradient with respect to `pred`.
/// Gradients at ignored pixels are exactly zero.
pub fn focal_loss<T: Float>(
    pred: &Tensor<T>,
    labels: &Tensor<u16>,
    gamma: T,
) -> Result<(T, Tensor<T>)> {
    if gamma < T::zero() {
        return Err(Error::InvalidInput("focal gamma must be >= 0".into()));
    }
    let (_, h, w) = check_pred_labels(pred, labels)?;
    let hw = h * w;
    let eps = T::from(LOG_EPS).unwrap();

    let labeled = labels.data().iter().filter(|&&id| id != IGNORE).count();
    if labeled == 0 {
        return Err(Error::NoSupervision);
    }
    let inv_n = T::one() / T::from(labeled).unwrap();

    let mut loss = T::zero();
    let mut grad = Tensor::filled(pred.dims().to_vec(), T::zero());
    let gdata = grad.data_mut();
    for (px, &id) in labels.data().iter().enumerate() {
        if id == IGNORE {
            continue;
        }
        let at = id as usize * hw + px;
        let p = pred.data()[at];
        let one_minus = T::one() - p;
        let logp = (p + eps).ln();
        loss = loss - one_minus.powf(gamma) * logp;
        let focus_term = if gamma == T::zero() {
            T::zero()
        } else {
            gamma * one_minus.powf(gamma - T::one()) * logp
        };
        gdata[at] = (focus_term - one_minus.powf(gamma) / (p + eps)) * inv_n;
    }
    Ok((loss * inv_n, grad))
}
