//! Lovász-softmax loss: the Lovász extension of the Jaccard loss evaluated
//! on per-class prediction errors, averaged over the classes present among
//! labeled pixels.

use num_traits::Float;

use crate::error::{Error, Result};
use crate::labels::IGNORE;
use crate::tensor::Tensor;

use super::check_pred_labels;

/// Returns the scalar loss (in `[0, 1]`) and its gradient with respect to
/// `pred`. Ignored pixels are dropped before sorting and get zero gradient.
pub fn lovasz_softmax<T: Float>(pred: &Tensor<T>, labels: &Tensor<u16>) -> Result<(T, Tensor<T>)> {
    let (_, h, w) = check_pred_labels(pred, labels)?;
    let hw = h * w;

    let labeled: Vec<usize> = labels
        .data()
        .iter()
        .enumerate()
        .filter(|(_, &id)| id != IGNORE)
        .map(|(px, _)| px)
        .collect();
    if labeled.is_empty() {
        return Err(Error::NoSupervision);
    }

    let mut present: Vec<u16> = labeled.iter().map(|&px| labels.data()[px]).collect();
    present.sort_unstable();
    present.dedup();

    let mut loss = T::zero();
    let mut grad = Tensor::filled(pred.dims().to_vec(), T::zero());
    for &cls in &present {
        let ch = cls as usize;
        // per labeled pixel: foreground flag and error |1{y=c} - p_c|
        let entries: Vec<(usize, bool, T)> = labeled
            .iter()
            .map(|&px| {
                let fg = labels.data()[px] == cls;
                let p = pred.data()[ch * hw + px];
                let err = if fg { T::one() - p } else { p };
                (px, fg, err)
            })
            .collect();

        // stable sort by error descending; ties keep pixel order
        let mut order: Vec<usize> = (0..entries.len()).collect();
        order.sort_by(|&a, &b| entries[b].2.partial_cmp(&entries[a].2).expect("finite errors"));

        let fg_total = entries.iter().filter(|e| e.1).count();
        debug_assert!(fg_total >= 1);
        // Jaccard extension gradient over sorted prefixes:
        // jac_k = 1 - |fg \ S_k| / |fg U S_k| with S_k the top-k errors
        let mut cum_fg = 0usize;
        let mut cum_bg = 0usize;
        let mut prev_jac = T::zero();
        for &slot in &order {
            let (px, fg, err) = entries[slot];
            if fg {
                cum_fg += 1;
            } else {
                cum_bg += 1;
            }
            let inter = T::from(fg_total - cum_fg).unwrap();
            let union = T::from(fg_total + cum_bg).unwrap();
            let jac = T::one() - inter / union;
            let g = jac - prev_jac;
            prev_jac = jac;
            loss = loss + err * g;
            let sign = if fg { -T::one() } else { T::one() };
            grad.data_mut()[ch * hw + px] = grad.data_mut()[ch * hw + px] + sign * g;
        }
    }

    let inv = T::one() / T::from(present.len()).unwrap();
    for g in grad.data_mut() {
        *g = *g * inv;
    }
    Ok((loss * inv, grad))
}

#[cfg(test)]
mod tests {
    use super::super::testutil::*;
    use super::*;
    use crate::check::gradient_check;
    use crate::rng::Rng;
    use std::collections::BTreeSet;

    #[test]
    fn perfect_one_hot_prediction_is_zero() {
        let labels = Tensor::new(vec![2, 3], vec![0u16, 1, 2, 0, IGNORE, 1]).unwrap();
        let pred: Tensor<f64> = crate::projection::one_hot(&labels, 3).unwrap();
        let (loss, grad) = lovasz_softmax(&pred, &labels).unwrap();
        assert!(loss.abs() < 1e-12);
        // errors are all zero so every Jaccard step lands on the first
        // prefix; the loss value stays zero regardless of the gradient
        assert!(grad.data().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn fully_wrong_single_pixel_scores_one() {
        let labels = Tensor::new(vec![1, 1], vec![0u16]).unwrap();
        let pred = Tensor::new(vec![2, 1, 1], vec![0.0f64, 1.0]).unwrap();
        let (loss, _) = lovasz_softmax(&pred, &labels).unwrap();
        assert!((loss - 1.0).abs() < 1e-12);
    }

    #[test]
    fn all_ignore_is_an_error() {
        let pred = Tensor::filled(vec![2, 2, 2], 0.5f64);
        let labels = Tensor::filled(vec![2, 2], IGNORE);
        assert!(matches!(
            lovasz_softmax(&pred, &labels),
            Err(Error::NoSupervision)
        ));
    }

    /// Independent evaluation of one class term using explicit prefix sets
    /// and the Jaccard loss written with set operations.
    fn class_term_set_oracle(
        pred: &Tensor<f64>,
        labels: &Tensor<u16>,
        cls: u16,
        hw: usize,
    ) -> f64 {
        let ch = cls as usize * hw;
        let labeled: Vec<usize> = labels
            .data()
            .iter()
            .enumerate()
            .filter(|(_, &id)| id != IGNORE)
            .map(|(px, _)| px)
            .collect();
        let fg: BTreeSet<usize> = labeled
            .iter()
            .copied()
            .filter(|&px| labels.data()[px] == cls)
            .collect();
        let mut errs: Vec<(usize, f64)> = labeled
            .iter()
            .map(|&px| {
                let p = pred.data()[ch + px];
                let e = if fg.contains(&px) { 1.0 - p } else { p };
                (px, e)
            })
            .collect();
        errs.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());

        let delta = |s: &BTreeSet<usize>| -> f64 {
            let minus: usize = fg.difference(s).count();
            let union: usize = fg.union(s).count();
            1.0 - minus as f64 / union as f64
        };
        let mut prefix = BTreeSet::new();
        let mut prev = 0.0;
        let mut total = 0.0;
        for &(px, e) in &errs {
            prefix.insert(px);
            let d = delta(&prefix);
            total += e * (d - prev);
            prev = d;
        }
        total
    }

    #[test]
    fn matches_set_based_extension_oracle() {
        let mut rng = Rng::new(61);
        for _ in 0..10 {
            let pred = random_prediction(&mut rng, 3, 4, 4);
            let labels = random_labels(&mut rng, 3, 4, 4, 0.7);
            if labels.data().iter().all(|&v| v == IGNORE) {
                continue;
            }
            let (loss, _) = lovasz_softmax(&pred, &labels).unwrap();
            let mut present: Vec<u16> = labels
                .data()
                .iter()
                .copied()
                .filter(|&v| v != IGNORE)
                .collect();
            present.sort_unstable();
            present.dedup();
            let want: f64 = present
                .iter()
                .map(|&cls| class_term_set_oracle(&pred, &labels, cls, 16))
                .sum::<f64>()
                / present.len() as f64;
            assert!((loss - want).abs() < 1e-6, "{loss} vs oracle {want}");
            assert!((0.0..=1.0 + 1e-9).contains(&loss));
        }
    }

    #[test]
    fn gradient_matches_finite_differences_and_respects_ignore() {
        let mut rng = Rng::new(67);
        let pred = random_prediction(&mut rng, 3, 4, 4);
        let labels = random_labels(&mut rng, 3, 4, 4, 0.6);
        let (_, grad) = lovasz_softmax(&pred, &labels).unwrap();
        for (px, &id) in labels.data().iter().enumerate() {
            if id == IGNORE {
                for ch in 0..3 {
                    assert_eq!(grad.data()[ch * 16 + px], 0.0);
                }
            }
        }
        let f = |data: &[f64]| {
            let t = Tensor::new(vec![3, 4, 4], data.to_vec()).unwrap();
            lovasz_softmax(&t, &labels).unwrap().0
        };
        let worst = gradient_check(f, pred.data(), grad.data(), 1e-6);
        assert!(worst < 1e-4, "gradient mismatch {worst}");
    }
}
