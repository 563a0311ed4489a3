//! Dynamic cross pseudo supervision: confidence-weighted mutual KL between
//! the filtered LiDAR prediction and the camera prediction.
//!
//! Each direction treats the other stream as a detached pseudo label: the
//! LiDAR-to-camera term weights `KL(Y_lidar || Y_cam)` by the camera's
//! confidence margin and sends gradient only into the LiDAR stream; the
//! camera-to-LiDAR term mirrors it with the roles swapped. The weight maps
//! themselves carry no gradient.

use num_traits::Float;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

use super::{confidence_map, dynamic_weight, kl_pixel};

/// Returns `(loss, grad_lidar, grad_cam)`; the loss is the sum of both
/// directional terms, each a mean over all pixels.
pub fn dycross_loss<T: Float>(
    y_lidar: &Tensor<T>,
    y_cam: &Tensor<T>,
    tau: T,
    kl_eps: T,
) -> Result<(T, Tensor<T>, Tensor<T>)> {
    let (c, h, w) = y_lidar.chw()?;
    if y_cam.chw()? != (c, h, w) {
        return Err(Error::ShapeMismatch(format!(
            "lidar prediction {:?} vs camera prediction {:?}",
            y_lidar.dims(),
            y_cam.dims()
        )));
    }
    let hw = h * w;
    let inv_hw = T::one() / T::from(hw).unwrap();

    let conf_lidar = confidence_map(y_lidar)?;
    let conf_cam = confidence_map(y_cam)?;
    let w_l2c = dynamic_weight(&conf_cam, &conf_lidar, tau)?;
    let w_c2l = dynamic_weight(&conf_lidar, &conf_cam, tau)?;

    let mut loss = T::zero();
    let mut grad_lidar = Tensor::filled(y_lidar.dims().to_vec(), T::zero());
    let mut grad_cam = Tensor::filled(y_cam.dims().to_vec(), T::zero());

    let lidar = y_lidar.data();
    let cam = y_cam.data();
    let mut p_buf = vec![T::zero(); c];
    let mut q_buf = vec![T::zero(); c];
    for px in 0..hw {
        for ch in 0..c {
            p_buf[ch] = lidar[ch * hw + px];
            q_buf[ch] = cam[ch * hw + px];
        }
        let wl = w_l2c.data()[px];
        if wl > T::zero() {
            loss = loss + wl * kl_pixel(&p_buf, &q_buf, kl_eps) * inv_hw;
            let scale = wl * inv_hw;
            for ch in 0..c {
                let (p, q) = (p_buf[ch], q_buf[ch]);
                let g = ((p + kl_eps) / (q + kl_eps)).ln() + p / (p + kl_eps);
                let slot = &mut grad_lidar.data_mut()[ch * hw + px];
                *slot = *slot + scale * g;
            }
        }
        let wc = w_c2l.data()[px];
        if wc > T::zero() {
            loss = loss + wc * kl_pixel(&q_buf, &p_buf, kl_eps) * inv_hw;
            let scale = wc * inv_hw;
            for ch in 0..c {
                let (p, q) = (q_buf[ch], p_buf[ch]);
                let g = ((p + kl_eps) / (q + kl_eps)).ln() + p / (p + kl_eps);
                let slot = &mut grad_cam.data_mut()[ch * hw + px];
                *slot = *slot + scale * g;
            }
        }
    }
    Ok((loss, grad_lidar, grad_cam))
}

#[cfg(test)]
mod tests {
    use super::super::testutil::*;
    use super::*;
    use crate::check::gradient_check;
    use crate::rng::Rng;

    const EPS: f64 = 1e-8;

    #[test]
    fn identical_predictions_give_zero() {
        let mut rng = Rng::new(71);
        let y = random_prediction(&mut rng, 3, 4, 4);
        let (loss, gl, gc) = dycross_loss(&y, &y, 0.0, EPS).unwrap();
        assert!(loss.abs() < 1e-12);
        // KL and its p-side gradient need not vanish at p == q, but the
        // weight map does: equal confidences never pass the strict gate
        assert!(gl.data().iter().all(|&v| v == 0.0));
        assert!(gc.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn tau_above_all_confidence_gates_everything_off() {
        let mut rng = Rng::new(73);
        let y_l = random_prediction(&mut rng, 5, 4, 4);
        let y_c = random_prediction(&mut rng, 5, 4, 4);
        // 5-class softmax of logits in [-2, 2] cannot reach confidence 1
        let (loss, gl, gc) = dycross_loss(&y_l, &y_c, 1.0, EPS).unwrap();
        assert_eq!(loss, 0.0);
        assert!(gl.data().iter().all(|&v| v == 0.0));
        assert!(gc.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn value_matches_per_pixel_oracle() {
        let mut rng = Rng::new(79);
        let y_l = random_prediction(&mut rng, 3, 4, 4);
        let y_c = random_prediction(&mut rng, 3, 4, 4);
        let tau = 0.4;
        let (loss, _, _) = dycross_loss(&y_l, &y_c, tau, EPS).unwrap();

        let conf = |t: &Tensor<f64>, px: usize| {
            (0..3).map(|ch| t.data()[ch * 16 + px]).fold(f64::MIN, f64::max)
        };
        let mut want = 0.0;
        for px in 0..16 {
            let (cl, cc) = (conf(&y_l, px), conf(&y_c, px));
            let p: Vec<f64> = (0..3).map(|ch| y_l.data()[ch * 16 + px]).collect();
            let q: Vec<f64> = (0..3).map(|ch| y_c.data()[ch * 16 + px]).collect();
            if cc > cl.max(tau) {
                want += (cc - cl) * kl_pixel(&p, &q, EPS) / 16.0;
            }
            if cl > cc.max(tau) {
                want += (cl - cc) * kl_pixel(&q, &p, EPS) / 16.0;
            }
        }
        assert!((loss - want).abs() < 1e-9, "{loss} vs {want}");
    }

    #[test]
    fn gradients_match_finite_differences_with_frozen_weights() {
        let mut rng = Rng::new(83);
        let y_l = random_prediction(&mut rng, 3, 4, 4);
        let y_c = random_prediction(&mut rng, 3, 4, 4);
        let tau = 0.35;
        let (_, grad_l, grad_c) = dycross_loss(&y_l, &y_c, tau, EPS).unwrap();

        // freeze the weight maps at the evaluation point, as the analytic
        // gradient treats them as constants
        let conf_l = confidence_map(&y_l).unwrap();
        let conf_c = confidence_map(&y_c).unwrap();
        let w_l2c = dynamic_weight(&conf_c, &conf_l, tau).unwrap();
        let w_c2l = dynamic_weight(&conf_l, &conf_c, tau).unwrap();

        // each directional term detaches the supervising distribution, so
        // the oracle for one stream varies only the term where that stream
        // is the learner (the other term is a constant for the difference)
        let f_lidar = |data: &[f64]| -> f64 {
            let mut total = 0.0;
            for px in 0..16 {
                let p: Vec<f64> = (0..3).map(|ch| data[ch * 16 + px]).collect();
                let q: Vec<f64> = (0..3).map(|ch| y_c.data()[ch * 16 + px]).collect();
                total += w_l2c.data()[px] * kl_pixel(&p, &q, EPS) / 16.0;
            }
            total
        };
        let worst_l = gradient_check(f_lidar, y_l.data(), grad_l.data(), 1e-6);
        assert!(worst_l < 1e-4, "lidar gradient mismatch {worst_l}");

        let f_cam = |data: &[f64]| -> f64 {
            let mut total = 0.0;
            for px in 0..16 {
                let p: Vec<f64> = (0..3).map(|ch| data[ch * 16 + px]).collect();
                let q: Vec<f64> = (0..3).map(|ch| y_l.data()[ch * 16 + px]).collect();
                total += w_c2l.data()[px] * kl_pixel(&p, &q, EPS) / 16.0;
            }
            total
        };
        let worst_c = gradient_check(f_cam, y_c.data(), grad_c.data(), 1e-6);
        assert!(worst_c < 1e-4, "camera gradient mismatch {worst_c}");
    }

    #[test]
    fn gradient_flows_only_into_the_learner_side() {
        // camera much more confident everywhere: only the l2c term fires,
        // so the camera gradient must be identically zero
        let y_l = Tensor::new(
            vec![2, 2, 2],
            vec![0.55, 0.55, 0.55, 0.55, 0.45, 0.45, 0.45, 0.45],
        )
        .unwrap();
        let y_c = Tensor::new(
            vec![2, 2, 2],
            vec![0.95, 0.95, 0.95, 0.95, 0.05, 0.05, 0.05, 0.05],
        )
        .unwrap();
        let (loss, gl, gc) = dycross_loss(&y_l, &y_c, 0.7, EPS).unwrap();
        assert!(loss > 0.0);
        assert!(gl.data().iter().any(|&v| v != 0.0));
        assert!(gc.data().iter().all(|&v| v == 0.0));
    }
}
