//! The two-head differential model, its objective and checkpoints.

mod checkpoint;
mod config;
mod loss;
mod network;
mod normalizer;

pub use checkpoint::{load_checkpoint, read_checkpoint_header, save_checkpoint, CheckpointHeader, TensorEntry, CHECKPOINT_MAGIC};
pub use config::ModelConfig;
pub use loss::{loss_and_grads, loss_total, per_sample_losses, smooth_l1, smooth_l1_grad, OutputGrads, SMOOTH_L1_BETA};
pub use network::{DifferentialModel, ForwardCache, ForwardOutputs, PairBatch, Predictions};
pub use normalizer::Normalizer;
