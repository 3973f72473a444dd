use serde::{Deserialize, Serialize};

/// Multiplies the learning rate by `factor` once the monitored loss has gone
/// `patience` consecutive evaluations without a strict decrease.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlateauScheduler {
    pub lr: f64,
    pub factor: f64,
    pub patience: usize,
    best: f64,
    bad_evals: usize,
}

impl PlateauScheduler {
    pub fn new(lr: f64, factor: f64, patience: usize) -> Self {
        Self {
            lr,
            factor,
            patience,
            best: f64::INFINITY,
            bad_evals: 0,
        }
    }

    pub fn best(&self) -> f64 {
        self.best
    }

    /// Records one evaluation and returns the learning rate to use next.
    pub fn step(&mut self, loss: f64) -> f64 {
        if loss < self.best {
            self.best = loss;
            self.bad_evals = 0;
        } else {
            self.bad_evals += 1;
            if self.bad_evals >= self.patience {
                self.lr *= self.factor;
                self.bad_evals = 0;
            }
        }
        self.lr
    }
}
