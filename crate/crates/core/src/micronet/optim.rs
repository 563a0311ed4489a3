//! SGD with momentum under a warmup-cosine learning-rate schedule.

use crate::error::{Error, Result};

use super::params::MicroNetParams;
use super::train::TrainConfig;

/// Learning rate at `step` of `total_steps`: linear warmup to `lr0` over the
/// first `warmup_fraction` of steps, then cosine decay to exactly zero at
/// `step == total_steps`.
pub fn learning_rate(cfg: &TrainConfig, step: usize, total_steps: usize) -> f64 {
    assert!(total_steps > 0);
    let warmup = (cfg.warmup_fraction * total_steps as f64).round() as usize;
    if step < warmup {
        return cfg.lr0 * (step + 1) as f64 / warmup as f64;
    }
    let span = (total_steps - warmup).max(1);
    let t = (step - warmup) as f64 / span as f64;
    if t >= 1.0 {
        0.0
    } else {
        cfg.lr0 * 0.5 * (1.0 + (std::f64::consts::PI * t).cos())
    }
}

/// One SGD step: `v = momentum * v + g`, `p -= lr * v`.
pub fn optimizer_step(
    params: &mut MicroNetParams<f32>,
    grads: &MicroNetParams<f32>,
    velocity: &mut MicroNetParams<f32>,
    step: usize,
    total_steps: usize,
    cfg: &TrainConfig,
) -> Result<()> {
    if step >= total_steps {
        return Err(Error::InvalidInput(format!(
            "step {step} out of range for {total_steps} total steps"
        )));
    }
    let lr = learning_rate(cfg, step, total_steps) as f32;
    let momentum = cfg.momentum as f32;
    velocity.scale(momentum);
    velocity.add_scaled(grads, 1.0);
    params.add_scaled(velocity, -lr);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> TrainConfig {
        TrainConfig::default()
    }

    #[test]
    fn warmup_and_decay_endpoints() {
        let c = cfg();
        // lr0 = 0.001, warmup 10% of 100 steps
        assert!((learning_rate(&c, 0, 100) - 0.0001).abs() < 1e-12);
        assert!((learning_rate(&c, 9, 100) - 0.001).abs() < 1e-12);
        assert!((learning_rate(&c, 10, 100) - 0.001).abs() < 1e-12);
        assert!(learning_rate(&c, 100, 100) < 1e-6 * c.lr0);
        assert_eq!(learning_rate(&c, 100, 100), 0.0);
    }

    #[test]
    fn schedule_is_nonincreasing_after_warmup() {
        let c = cfg();
        let mut prev = f64::MAX;
        for step in 10..=200 {
            let lr = learning_rate(&c, step, 200);
            if step >= 20 {
                assert!(lr <= prev + 1e-15);
            }
            prev = lr;
        }
    }

    #[test]
    fn momentum_accumulates() {
        let c = TrainConfig {
            warmup_fraction: 0.0,
            ..cfg()
        };
        let mut params = MicroNetParams::<f32>::zeros(2);
        let mut grads = MicroNetParams::<f32>::zeros(2);
        grads.lidar_enc1.weight.data_mut()[0] = 1.0;
        let mut velocity = MicroNetParams::<f32>::zeros(2);
        optimizer_step(&mut params, &grads, &mut velocity, 0, 1000, &c).unwrap();
        let after_one = params.lidar_enc1.weight.data()[0];
        optimizer_step(&mut params, &grads, &mut velocity, 1, 1000, &c).unwrap();
        let after_two = params.lidar_enc1.weight.data()[0];
        // second step moves further due to accumulated velocity
        assert!((after_two - after_one).abs() > after_one.abs());
        assert!(optimizer_step(&mut params, &grads, &mut velocity, 1000, 1000, &c).is_err());
    }
}
