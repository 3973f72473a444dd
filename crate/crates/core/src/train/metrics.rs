use serde::{Deserialize, Serialize};

use crate::data::PairedSample;
use crate::embed::EmbeddingTable;
use crate::model::{DifferentialModel, PairBatch};
use crate::{Error, Real, Result};

/// Error statistics for one prediction head, in raw target units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadMetrics {
    pub mae: f64,
    /// Percent, over nonzero targets; absent when every target is zero.
    pub mape: Option<f64>,
    /// Absent when the targets have zero variance.
    pub r2: Option<f64>,
    pub n_samples: usize,
    pub n_zero_excluded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub design: HeadMetrics,
    pub kernel: Option<HeadMetrics>,
    pub delta: Option<HeadMetrics>,
    pub n_samples: usize,
}

pub fn compute_metrics(y: &[f64], y_hat: &[f64]) -> Result<HeadMetrics> {
    if y.is_empty() {
        return Err(Error::EmptySamples);
    }
    if y.len() != y_hat.len() {
        return Err(Error::DimensionMismatch {
            what: "metric inputs",
            expected: y.len(),
            got: y_hat.len(),
        });
    }
    let n = y.len() as f64;
    let mae = y.iter().zip(y_hat).map(|(a, b)| (a - b).abs()).sum::<f64>() / n;

    let nonzero: Vec<(f64, f64)> = y.iter().zip(y_hat).filter(|(a, _)| **a != 0.0).map(|(a, b)| (*a, *b)).collect();
    let mape = (!nonzero.is_empty())
        .then(|| 100.0 * nonzero.iter().map(|(a, b)| (a - b).abs() / a.abs()).sum::<f64>() / nonzero.len() as f64);

    let mean = y.iter().sum::<f64>() / n;
    let ss_tot: f64 = y.iter().map(|a| (a - mean).powi(2)).sum();
    let ss_res: f64 = y.iter().zip(y_hat).map(|(a, b)| (a - b).powi(2)).sum();
    let r2 = (ss_tot > 0.0).then(|| 1.0 - ss_res / ss_tot);

    Ok(HeadMetrics {
        mae,
        mape,
        r2,
        n_samples: y.len(),
        n_zero_excluded: y.len() - nonzero.len(),
    })
}

/// Eval-mode metrics for the design prediction and, for differential
/// models, the kernel and delta heads.
pub fn evaluate<T: Real>(
    model: &DifferentialModel<T>,
    samples: &[&PairedSample],
    table: Option<&EmbeddingTable>,
    batch_size: usize,
) -> Result<MetricsReport> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let (mut y_k, mut y_d, mut delta) = (Vec::new(), Vec::new(), Vec::new());
    for chunk in samples.chunks(batch_size.max(1)) {
        let batch = PairBatch::<T>::new(chunk, table, model.config.use_code_emb)?;
        let p = model.predict(&batch)?;
        y_d.extend(p.y_d);
        if let Some(v) = p.y_k {
            y_k.extend(v);
        }
        if let Some(v) = p.delta {
            delta.extend(v);
        }
    }
    let truth_d: Vec<f64> = samples.iter().map(|s| s.y_d).collect();
    let truth_k: Vec<f64> = samples.iter().map(|s| s.y_k).collect();
    let truth_delta: Vec<f64> = samples.iter().map(|s| s.delta()).collect();
    let differential = model.is_differential();
    Ok(MetricsReport {
        design: compute_metrics(&truth_d, &y_d)?,
        kernel: if differential { Some(compute_metrics(&truth_k, &y_k)?) } else { None },
        delta: if differential { Some(compute_metrics(&truth_delta, &delta)?) } else { None },
        n_samples: samples.len(),
    })
}
