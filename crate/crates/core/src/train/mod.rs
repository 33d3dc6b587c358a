//! Framewise cross-entropy training against given alignments, and parameter
//! import from a trained global-attention model.

mod check;
mod import;
mod loss;
mod state;
mod trainer;

#[cfg(test)]
mod tests;

pub use check::{gradient_check, GradCheck};
pub use import::import_global;
pub use loss::{loss, loss_and_grads, sequence_loss, LossBreakdown};
pub use state::TrainerState;
pub use trainer::{estimate_static_table, EpochRecord, TrainConfig, Trainer};
