use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// What the l1 loss compares.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    /// Real and imaginary channels.
    #[default]
    Complex,
    Magnitude,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub lr_init: f64,
    pub lr_decay: f64,
    /// Epochs between decays.
    pub decay_every: usize,
    pub max_epochs: usize,
    pub batch_size: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub seed: u64,
    /// Global-norm gradient clip; `None` disables clipping.
    pub clip_norm: Option<f64>,
    pub loss: LossKind,
    pub acceleration: f64,
    /// Draw a fresh mask per sample and epoch instead of one fixed mask.
    pub mask_per_sample: bool,
    /// Scale each sample by its 99th-percentile magnitude before training.
    pub normalize: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr_init: 1.5e-4,
            lr_decay: 0.9,
            decay_every: 5,
            max_epochs: 50,
            batch_size: 4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            seed: 0,
            clip_norm: Some(1.0),
            loss: LossKind::Complex,
            acceleration: 4.0,
            mask_per_sample: false,
            normalize: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(format!("train config: {what}")));
        if !(self.lr_init > 0.0) {
            return bad("lr_init must be > 0");
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return bad("lr_decay must be in (0, 1]");
        }
        if self.decay_every == 0 || self.max_epochs == 0 || self.batch_size == 0 {
            return bad("decay_every, max_epochs and batch_size must be positive");
        }
        if !(self.beta1 > 0.0 && self.beta1 < 1.0 && self.beta2 > 0.0 && self.beta2 < 1.0) {
            return bad("betas must be in (0, 1)");
        }
        if !(self.eps > 0.0) {
            return bad("eps must be > 0");
        }
        if let Some(c) = self.clip_norm {
            if !(c > 0.0) {
                return bad("clip_norm must be > 0");
            }
        }
        if !(self.acceleration > 1.0) {
            return bad("acceleration must be > 1");
        }
        Ok(())
    }
}

/// `lr_init * lr_decay^floor(epoch / decay_every)`.
pub fn lr_schedule(epoch: usize, cfg: &TrainConfig) -> f64 {
    cfg.lr_init * cfg.lr_decay.powi((epoch / cfg.decay_every) as i32)
}
