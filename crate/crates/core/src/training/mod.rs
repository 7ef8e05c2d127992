//! Windowed teacher-forced training with Adam.

pub mod data;
pub mod loss;
pub mod trainer;

pub use data::{corpus_norm_meta, load_dataset, mean_pose, sample_positions, sample_windows, ClipPair, Window};
pub use loss::{compute_loss, identity_baseline, loss_graph, LossNodes, LossTerms};
pub use trainer::{
    fit, read_loss_log, step_rng, train_step, window_gradients, write_loss_log, FitOutcome, LossRecord, Trainer,
    TrainingConfig, FINAL_CHECKPOINT, LOSS_LOG,
};
