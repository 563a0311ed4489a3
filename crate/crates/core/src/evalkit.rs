//! Segmentation metrics: ignore-aware confusion accumulation, mean IoU, and
//! the empty-region diagnostic that scores only pixels without LiDAR
//! returns.

use crate::error::{Error, Result};
use crate::labels::{IGNORE, UNPROJECTED};
use crate::tensor::Tensor;

/// `N_cls x N_cls` confusion counts plus tallies of skipped pairs.
/// Accumulation is integer addition, so ordering never matters; parallel
/// evaluation merges per-thread matrices with [`ConfusionMatrix::merge`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfusionMatrix {
    n_cls: usize,
    /// Row = true class, column = predicted class.
    counts: Vec<u64>,
    /// Pairs skipped because the truth was the ignore sentinel.
    pub skipped_ignore: u64,
    /// Pairs skipped because the prediction was the unprojected sentinel;
    /// reported as coverage loss.
    pub skipped_unprojected: u64,
}

impl ConfusionMatrix {
    pub fn new(n_cls: usize) -> Self {
        ConfusionMatrix {
            n_cls,
            counts: vec![0; n_cls * n_cls],
            skipped_ignore: 0,
            skipped_unprojected: 0,
        }
    }

    pub fn n_cls(&self) -> usize {
        self.n_cls
    }

    pub fn count(&self, true_id: usize, pred_id: usize) -> u64 {
        self.counts[true_id * self.n_cls + pred_id]
    }

    pub fn total_scored(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Fraction of non-ignored pairs that were scorable (prediction not
    /// unprojected).
    pub fn coverage(&self) -> f64 {
        let scored = self.total_scored();
        let denom = scored + self.skipped_unprojected;
        if denom == 0 {
            return 0.0;
        }
        scored as f64 / denom as f64
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        assert_eq!(self.n_cls, other.n_cls);
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.skipped_ignore += other.skipped_ignore;
        self.skipped_unprojected += other.skipped_unprojected;
    }
}

/// Accumulates prediction/truth pairs. Pairs with an ignored truth or an
/// unprojected prediction are skipped and tallied separately; any other id
/// at or above `n_cls` is an error.
pub fn confusion_update(cm: &mut ConfusionMatrix, pred_ids: &[u16], true_ids: &[u16]) -> Result<()> {
    if pred_ids.len() != true_ids.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} predictions vs {} truths",
            pred_ids.len(),
            true_ids.len()
        )));
    }
    for (&pred, &truth) in pred_ids.iter().zip(true_ids) {
        if truth == IGNORE {
            cm.skipped_ignore += 1;
            continue;
        }
        if pred == UNPROJECTED {
            cm.skipped_unprojected += 1;
            continue;
        }
        if truth as usize >= cm.n_cls {
            return Err(Error::InvalidInput(format!(
                "true id {truth} out of range for {} classes",
                cm.n_cls
            )));
        }
        if pred as usize >= cm.n_cls {
            return Err(Error::InvalidInput(format!(
                "predicted id {pred} out of range for {} classes",
                cm.n_cls
            )));
        }
        cm.counts[truth as usize * cm.n_cls + pred as usize] += 1;
    }
    Ok(())
}

/// `TP / (TP + FP + FN)`; `None` when the class is absent from both
/// prediction and truth.
pub fn iou(tp: u64, fp: u64, fn_: u64) -> Option<f64> {
    let denom = tp + fp + fn_;
    (denom > 0).then(|| tp as f64 / denom as f64)
}

/// Per-class IoU (`None` for classes absent from both prediction and truth)
/// and the mean over present classes.
pub fn miou(cm: &ConfusionMatrix) -> Result<(Vec<Option<f64>>, f64)> {
    let n = cm.n_cls;
    let mut per_class = vec![None; n];
    let mut sum = 0.0;
    let mut scored = 0usize;
    for c in 0..n {
        let tp = cm.count(c, c);
        let fn_: u64 = (0..n).filter(|&k| k != c).map(|k| cm.count(c, k)).sum();
        let fp: u64 = (0..n).filter(|&k| k != c).map(|k| cm.count(k, c)).sum();
        if let Some(v) = iou(tp, fp, fn_) {
            per_class[c] = Some(v);
            sum += v;
            scored += 1;
        }
    }
    if scored == 0 {
        return Err(Error::InvalidInput("no scorable class".into()));
    }
    Ok((per_class, sum / scored as f64))
}

/// Mean IoU restricted to pixels with no LiDAR return (range channel zero).
pub fn empty_region_miou(
    pred2d_ids: &Tensor<u16>,
    label2d: &Tensor<u16>,
    lidar_map: &Tensor<f32>,
    n_cls: usize,
) -> Result<(Vec<Option<f64>>, f64)> {
    let (h, w) = pred2d_ids.hw()?;
    if label2d.hw()? != (h, w) {
        return Err(Error::ShapeMismatch("label map shape".into()));
    }
    let (c, mh, mw) = lidar_map.chw()?;
    if (mh, mw) != (h, w) || c < 1 {
        return Err(Error::ShapeMismatch("lidar map shape".into()));
    }
    let hw = h * w;
    let range = &lidar_map.data()[..hw];
    let mut pred = Vec::new();
    let mut truth = Vec::new();
    for px in 0..hw {
        if range[px] == 0.0 {
            pred.push(pred2d_ids.data()[px]);
            truth.push(label2d.data()[px]);
        }
    }
    if pred.is_empty() {
        return Err(Error::InvalidInput(
            "no empty pixels: lidar map is fully dense".into(),
        ));
    }
    let mut cm = ConfusionMatrix::new(n_cls);
    confusion_update(&mut cm, &pred, &truth)?;
    miou(&cm)
}

/// `metric,class,value` CSV rows for an evaluation run.
pub fn results_csv(rows: &[(String, String, f64)]) -> String {
    let mut out = String::from("metric,class,value\n");
    for (metric, class, value) in rows {
        out.push_str(&format!("{metric},{class},{value}\n"));
    }
    out
}
