//! l1 / Adam training with a step learning-rate schedule, gradient clipping,
//! checkpoints and deterministic resumption.

mod adam;
mod config;
mod trainer;

pub use adam::{adam_step, AdamHyper, OptimState};
pub use config::{lr_schedule, LossKind, TrainConfig};
pub use trainer::{write_metrics_csv, EpochMetrics, Trainer, TrainerState};
