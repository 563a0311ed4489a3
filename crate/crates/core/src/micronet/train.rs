//! Training loop: seeded, single-threaded, deterministic.

use crate::error::{Error, Result};
use crate::losses::{tau_schedule, total_loss, DycrossConfig};
use crate::rng::Rng;
use crate::tensor::Tensor;

use super::backward::micronet_backward;
use super::forward::{micronet_forward, NetToggles};
use super::optim::{learning_rate, optimizer_step};
use super::params::{micronet_init, MicroNetParams};

/// Training hyperparameters and toggles.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub lr0: f64,
    pub warmup_fraction: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub momentum: f64,
    pub n_cls: usize,
    pub toggles: NetToggles,
    pub dycross: DycrossConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr0: 0.001,
            warmup_fraction: 0.1,
            epochs: 30,
            batch_size: 4,
            seed: 0,
            momentum: 0.9,
            n_cls: 5,
            toggles: NetToggles::default(),
            dycross: DycrossConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lr0 <= 0.0 {
            return Err(Error::InvalidInput("lr0 must be > 0".into()));
        }
        if !(0.0..1.0).contains(&self.warmup_fraction) {
            return Err(Error::InvalidInput(
                "warmup_fraction must be in [0, 1)".into(),
            ));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidInput("batch_size must be >= 1".into()));
        }
        if self.n_cls < 2 {
            return Err(Error::InvalidInput("n_cls must be >= 2".into()));
        }
        self.dycross.validate()
    }

    /// Cross-supervision config actually applied: alpha is forced to zero
    /// when the dycross toggle is off.
    pub fn effective_dycross(&self) -> DycrossConfig {
        if self.toggles.use_dycross {
            self.dycross
        } else {
            DycrossConfig {
                alpha: 0.0,
                ..self.dycross
            }
        }
    }
}

/// One training sample: projected LiDAR map, camera image, sparse labels.
#[derive(Clone, Debug)]
pub struct TrainSample {
    pub lidar_map: Tensor<f32>,
    pub cam_image: Tensor<f32>,
    pub label_p3d: Tensor<u16>,
}

/// One logged optimizer step.
#[derive(Clone, Copy, Debug)]
pub struct MetricsRow {
    pub epoch: usize,
    pub step: usize,
    pub lr: f64,
    pub tau: f64,
    pub l_foc_lidar: f64,
    pub l_lov_lidar: f64,
    pub l_foc_cam: f64,
    pub l_lov_cam: f64,
    pub l_dycross: f64,
    pub total: f64,
}

pub const METRICS_CSV_HEADER: &str =
    "epoch,step,lr,tau,l_foc_lidar,l_lov_lidar,l_foc_cam,l_lov_cam,l_dycross,total";

impl MetricsRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.epoch,
            self.step,
            self.lr,
            self.tau,
            self.l_foc_lidar,
            self.l_lov_lidar,
            self.l_foc_cam,
            self.l_lov_cam,
            self.l_dycross,
            self.total
        )
    }
}

/// Serializes a metrics log to CSV text.
pub fn metrics_to_csv(log: &[MetricsRow]) -> String {
    let mut out = String::from(METRICS_CSV_HEADER);
    out.push('\n');
    for row in log {
        out.push_str(&row.to_csv());
        out.push('\n');
    }
    out
}

/// Trains from a fresh seeded initialization. Samples are visited in a
/// seeded shuffled order each epoch; batch gradients are the mean of
/// per-sample gradients. Returns the final parameters and the per-step log.
pub fn train(
    samples: &[TrainSample],
    cfg: &TrainConfig,
) -> Result<(MicroNetParams<f32>, Vec<MetricsRow>)> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(Error::InvalidInput("training dataset is empty".into()));
    }
    let mut rng = Rng::new(cfg.seed);
    let params = micronet_init(&mut rng, cfg.n_cls);
    train_from(params, samples, cfg, &mut rng)
}

/// Trains from explicit initial parameters; the ablation harness uses this
/// to share one initialization across toggle variants.
pub fn train_from(
    mut params: MicroNetParams<f32>,
    samples: &[TrainSample],
    cfg: &TrainConfig,
    rng: &mut Rng,
) -> Result<(MicroNetParams<f32>, Vec<MetricsRow>)> {
    cfg.validate()?;
    let steps_per_epoch = samples.len().div_ceil(cfg.batch_size);
    let total_steps = cfg.epochs * steps_per_epoch;
    let mut log = Vec::with_capacity(total_steps);
    if total_steps == 0 {
        return Ok((params, log));
    }

    let dycross_cfg = cfg.effective_dycross();
    let mut velocity = MicroNetParams::<f32>::zeros(cfg.n_cls);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut global_step = 0usize;

    for epoch in 0..cfg.epochs {
        rng.shuffle(&mut order);
        for batch in order.chunks(cfg.batch_size) {
            let progress = if total_steps > 1 {
                global_step as f64 / (total_steps - 1) as f64
            } else {
                1.0
            };
            let tau = tau_schedule(progress, &dycross_cfg) as f32;

            let mut grads = MicroNetParams::<f32>::zeros(cfg.n_cls);
            let mut sums = [0.0f64; 5];
            for &i in batch {
                let sample = &samples[i];
                let out = micronet_forward(
                    &sample.lidar_map,
                    &sample.cam_image,
                    &params,
                    cfg.toggles,
                )?;
                let loss = total_loss(
                    &out.y_lidar,
                    &out.y_cam,
                    &sample.label_p3d,
                    tau,
                    &dycross_cfg,
                )?;
                if !loss.total.is_finite() {
                    return Err(Error::Diverged {
                        epoch,
                        step: global_step,
                    });
                }
                let sample_grads =
                    micronet_backward(&out.trace, &loss.grad_lidar, &loss.grad_cam, &params);
                grads.add_scaled(&sample_grads, 1.0);
                for (slot, v) in sums.iter_mut().zip([
                    loss.focal_lidar,
                    loss.lovasz_lidar,
                    loss.focal_cam,
                    loss.lovasz_cam,
                    loss.dycross,
                ]) {
                    *slot += v as f64;
                }
            }
            let inv = 1.0 / batch.len() as f32;
            grads.scale(inv);
            if !grads.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    step: global_step,
                });
            }

            let lr = learning_rate(cfg, global_step, total_steps);
            let n = batch.len() as f64;
            let terms = [sums[0] / n, sums[1] / n, sums[2] / n, sums[3] / n, sums[4] / n];
            // the logged total is rebuilt from the logged terms so a zero
            // alpha removes the cross term from it exactly
            let supervised = terms[0] + terms[1] + terms[2] + terms[3];
            let total = if dycross_cfg.alpha > 0.0 {
                supervised + dycross_cfg.alpha * terms[4]
            } else {
                supervised
            };
            log.push(MetricsRow {
                epoch,
                step: global_step,
                lr,
                tau: tau as f64,
                l_foc_lidar: terms[0],
                l_lov_lidar: terms[1],
                l_foc_cam: terms[2],
                l_lov_cam: terms[3],
                l_dycross: terms[4],
                total,
            });
            optimizer_step(
                &mut params,
                &grads,
                &mut velocity,
                global_step,
                total_steps,
                cfg,
            )?;
            global_step += 1;
        }
    }
    Ok((params, log))
}
