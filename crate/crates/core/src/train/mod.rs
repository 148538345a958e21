//! Loss functions, optimizer and the cross-validated training loop.

mod adam;
mod loss;
mod monitor;
mod trainer;

pub use adam::{adam_step, clip_global_norm, AdamConfig, AdamState};
pub use loss::{loss, mse_mean, wmse, wmse_value, LossKind};
pub use monitor::CollapseMonitor;
pub use trainer::{
    evaluate_wmse, train_fold, train_folds, window_gradients, EpochLog, FoldResult, TrainConfig,
    WindowGrad,
};
