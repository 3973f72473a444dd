//! Mini-batch training, learning-rate scheduling and evaluation metrics.

mod metrics;
mod optim;
mod scheduler;
mod trainer;

pub use metrics::{compute_metrics, evaluate, HeadMetrics, MetricsReport};
pub use optim::{Adam, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};
pub use scheduler::PlateauScheduler;
pub use trainer::{evaluate_loss, samples_loss, train, EpochRecord, TrainConfig, TrainHistory};
