use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::optim::Adam;
use super::scheduler::PlateauScheduler;
use crate::data::{Dataset, PairedSample, SplitAssignment};
use crate::embed::EmbeddingTable;
use crate::gnn::{zeros_like, Backbone, Params, PnaStats};
use crate::model::{loss_and_grads, per_sample_losses, DifferentialModel, Normalizer, PairBatch};
use crate::{Error, Real, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub plateau_patience: usize,
    pub plateau_factor: f64,
    pub seed: u64,
    /// Validate every this many epochs (and after the last one).
    pub eval_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 5e-4,
            batch_size: 16,
            max_epochs: 200,
            plateau_patience: 15,
            plateau_factor: 0.8,
            seed: 0,
            eval_every: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("lr must be positive, got {}", self.lr)));
        }
        if !(self.plateau_factor > 0.0 && self.plateau_factor < 1.0) {
            return Err(Error::Config(format!(
                "plateau_factor must lie in (0, 1), got {}",
                self.plateau_factor
            )));
        }
        if self.batch_size == 0 || self.max_epochs == 0 || self.eval_every == 0 {
            return Err(Error::Config("batch_size, max_epochs and eval_every must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
    /// Learning rate used during this epoch.
    pub lr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub steps: usize,
}

impl TrainHistory {
    pub fn train_losses(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.train_loss).collect()
    }

    pub fn val_losses(&self) -> Vec<f64> {
        self.epochs.iter().filter_map(|e| e.val_loss).collect()
    }

    pub fn learning_rates(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.lr).collect()
    }
}

fn check_embeddings(model_cfg_dim: usize, table: Option<&EmbeddingTable>, samples: &[&PairedSample]) -> Result<()> {
    let table = table.ok_or_else(|| match samples.first() {
        Some(s) => Error::MissingEmbedding(s.design_id.clone()),
        None => Error::EmptySamples,
    })?;
    if table.dim() != model_cfg_dim {
        return Err(Error::DimensionMismatch {
            what: "code embedding dimension (code_dim)",
            expected: model_cfg_dim,
            got: table.dim(),
        });
    }
    for s in samples {
        if table.lookup(&s.design_id).is_err() {
            return Err(Error::MissingEmbedding(s.design_id.clone()));
        }
    }
    Ok(())
}

fn build_batches<T: Real>(
    samples: &[&PairedSample],
    table: Option<&EmbeddingTable>,
    use_code_emb: bool,
    batch_size: usize,
) -> Result<Vec<PairBatch<T>>> {
    samples
        .chunks(batch_size)
        .map(|chunk| PairBatch::new(chunk, table, use_code_emb))
        .collect()
}

/// Mean per-sample objective (normalized space, eval mode) over `batches`.
pub fn evaluate_loss<T: Real>(model: &DifferentialModel<T>, batches: &[PairBatch<T>]) -> Result<f64> {
    let (mut total, mut count) = (0.0, 0usize);
    for batch in batches {
        let (out, _) = model.forward(batch, None)?;
        let (y_k, y_d) = batch.targets(&model.normalizer);
        total += per_sample_losses(&out, &y_k, &y_d).iter().map(|l| l.as_f64()).sum::<f64>();
        count += batch.len();
    }
    if count == 0 {
        return Err(Error::EmptySamples);
    }
    Ok(total / count as f64)
}

/// Mean per-sample objective of `samples` under `model`.
pub fn samples_loss<T: Real>(
    model: &DifferentialModel<T>,
    samples: &[&PairedSample],
    table: Option<&EmbeddingTable>,
    batch_size: usize,
) -> Result<f64> {
    let batches = build_batches(samples, table, model.config.use_code_emb, batch_size.max(1))?;
    evaluate_loss(model, &batches)
}

fn zero_grads<T: Real, P: Params<T>>(grads: &mut P) {
    grads.visit_mut("", &mut |_, mut v| v.fill(T::zero()));
}

/// Trains `model` on the train split and returns the parameters of the
/// epoch with the lowest validation loss (earliest on ties).
///
/// The target normalizer and, for PNA, the degree statistics are fitted on
/// the training split before the first epoch.
pub fn train<T: Real>(
    mut model: DifferentialModel<T>,
    dataset: &Dataset,
    split: &SplitAssignment,
    table: Option<&EmbeddingTable>,
    cfg: &TrainConfig,
) -> Result<(DifferentialModel<T>, TrainHistory)> {
    cfg.validate()?;
    let train_samples = dataset.select(&split.train)?;
    let val_samples = dataset.select(&split.val)?;
    if train_samples.is_empty() || val_samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let use_code = model.config.use_code_emb;
    if use_code {
        let all = dataset.select(&split.test)?;
        let every: Vec<&PairedSample> = train_samples.iter().chain(&val_samples).chain(&all).copied().collect();
        check_embeddings(model.config.code_dim, table, &every)?;
    }

    model.normalizer = Normalizer::fit(train_samples.iter().map(|s| s.y_d));
    if model.config.backbone == Backbone::Pna {
        let graphs = train_samples
            .iter()
            .flat_map(|s| [s.kernel_graph.as_ref(), s.design_graph.as_ref()]);
        model.set_pna_stats(PnaStats::from_graphs(graphs));
    }

    let val_batches = build_batches::<T>(&val_samples, table, use_code, cfg.batch_size)?;
    let mut order: Vec<&PairedSample> = train_samples.clone();
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    dropout_rng.set_stream(1);

    let mut grads = zeros_like(&model);
    let mut adam = Adam::new(&model);
    let mut scheduler = PlateauScheduler::new(cfg.lr, cfg.plateau_factor, cfg.plateau_patience);
    let mut best: Option<(DifferentialModel<T>, usize, f64)> = None;
    let mut epochs = Vec::with_capacity(cfg.max_epochs);
    let mut steps = 0;

    for epoch in 1..=cfg.max_epochs {
        let lr = scheduler.lr;
        order.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let batch = PairBatch::<T>::new(chunk, table, use_code)?;
            let (out, cache) = model.forward(&batch, Some(&mut dropout_rng))?;
            let (y_k, y_d) = batch.targets(&model.normalizer);
            let (loss, dout) = loss_and_grads(&out, &y_k, &y_d);
            let loss = loss.as_f64();
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    batch: b,
                    designs: batch.design_ids.join(","),
                });
            }
            epoch_loss += loss * batch.len() as f64;
            zero_grads(&mut grads);
            model.backward(&batch, &cache, &dout, &mut grads);
            adam.step(&mut model, &grads, lr)?;
            steps += 1;
        }
        let train_loss = epoch_loss / order.len() as f64;

        let val_loss = if epoch % cfg.eval_every == 0 || epoch == cfg.max_epochs {
            let v = evaluate_loss(&model, &val_batches)?;
            if best.as_ref().is_none_or(|(_, _, b)| v < *b) {
                best = Some((model.clone(), epoch, v));
            }
            scheduler.step(v);
            Some(v)
        } else {
            None
        };
        epochs.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
            lr,
        });
    }

    let (best_model, best_epoch, best_val_loss) = match best {
        Some(b) => b,
        None => {
            let v = evaluate_loss(&model, &val_batches)?;
            let e = cfg.max_epochs;
            (model, e, v)
        }
    };
    Ok((
        best_model,
        TrainHistory {
            epochs,
            best_epoch,
            best_val_loss,
            steps,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        TrainConfig::default().validate().unwrap();
        for bad in [
            TrainConfig { lr: 0.0, ..Default::default() },
            TrainConfig { plateau_factor: 1.0, ..Default::default() },
            TrainConfig { batch_size: 0, ..Default::default() },
        ] {
            assert!(bad.validate().is_err());
        }
        assert!(serde_json::from_str::<TrainConfig>(r#"{"learning_rate":1}"#).is_err());
    }
}
