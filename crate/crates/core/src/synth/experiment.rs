use serde::{Deserialize, Serialize};

use super::{generate, SynthConfig};
use crate::data::split_design_level;
use crate::model::{DifferentialModel, ModelConfig};
use crate::train::{evaluate, train, MetricsReport, TrainConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdvantageRun {
    pub seed: u64,
    pub differential: MetricsReport,
    pub direct: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdvantageReport {
    pub runs: Vec<AdvantageRun>,
    /// Mean test-split design MAPE (%) over seeds.
    pub differential_mape: f64,
    pub direct_mape: f64,
    /// `differential_mape / direct_mape`.
    pub ratio: f64,
}

/// Trains the differential model and its `use_diff = false` counterpart on
/// the same split and seed, once per seed, and compares test design MAPE.
pub fn differential_advantage_experiment(
    cfg: &SynthConfig,
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
    seeds: &[u64],
) -> Result<AdvantageReport> {
    if seeds.is_empty() {
        return Err(Error::Config("at least one seed is required".into()));
    }
    let data = generate(cfg)?;
    let table = data.embeddings.as_ref();
    let mut model_cfg = model_cfg.clone();
    if model_cfg.use_code_emb {
        model_cfg.code_dim = cfg.embedding_dim;
    }
    let mut runs = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let split = split_design_level(&data.dataset, seed)?;
        let test = data.dataset.select(&split.test)?;
        let tcfg = TrainConfig {
            seed,
            ..train_cfg.clone()
        };
        let mut reports = Vec::with_capacity(2);
        for use_diff in [true, false] {
            let mcfg = ModelConfig {
                use_diff,
                ..model_cfg.clone()
            };
            let model = DifferentialModel::<f32>::new(mcfg, seed)?;
            let (model, _) = train(model, &data.dataset, &split, table, &tcfg)?;
            reports.push(evaluate(&model, &test, table, tcfg.batch_size)?);
        }
        let direct = reports.pop().expect("two reports");
        let differential = reports.pop().expect("two reports");
        runs.push(AdvantageRun {
            seed,
            differential,
            direct,
        });
    }
    let mean = |f: &dyn Fn(&AdvantageRun) -> f64| runs.iter().map(f).sum::<f64>() / runs.len() as f64;
    let differential_mape = mean(&|r| r.differential.design.mape.unwrap_or(f64::NAN));
    let direct_mape = mean(&|r| r.direct.design.mape.unwrap_or(f64::NAN));
    Ok(AdvantageReport {
        ratio: differential_mape / direct_mape,
        runs,
        differential_mape,
        direct_mape,
    })
}
