//! Masked cross-entropy, Adam, the teacher-forced training loop and
//! checkpoint persistence.

mod adam;
mod checkpoint;
mod loss;
mod metrics;
mod trainer;

pub use adam::{clip_grad_norm, AdamConfig, OptimizerState};
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, FORMAT_VERSION, MAGIC};
pub use loss::{count_target_tokens, sequence_loss, sequence_loss_value};
pub use metrics::{EpochRecord, TrainLog, METRICS_HEADER};
pub use trainer::{batch_gradients, batch_loss, evaluate, BatchResult, TrainOptions, Trainer};
