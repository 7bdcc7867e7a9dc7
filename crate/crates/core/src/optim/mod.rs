//! Parameter updates and the training loop.

mod config;
mod step;
mod train;

pub use config::{Method, OptimizerConfig, Schedule};
pub use step::{bias_step, bp_step, gbp_step, gbp_update, pgd_step};
pub use train::{
    train, train_with, Dataset, EpochReport, MetricsRecord, Targets, TrainOptions,
    REFEASIBILIZE_EVERY,
};
