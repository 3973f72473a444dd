use ndarray::{concatenate, s, Array1, Array2, ArrayViewD, ArrayViewMutD, Axis};
use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::ModelConfig;
use super::loss::OutputGrads;
use super::normalizer::Normalizer;
use crate::data::{batch_graphs, GraphBatch, PairedSample, Side, NODE_FEATURE_DIM};
use crate::embed::EmbeddingTable;
use crate::gnn::{join, reborrow, Encoder, EncoderCache, Linear, Mlp, MlpCache, Params, PnaStats};
use crate::{Error, Real, Result};

/// Inputs for a batch of paired samples, ready for the model.
#[derive(Debug, Clone)]
pub struct PairBatch<T> {
    pub kernel: GraphBatch,
    pub design: GraphBatch,
    pub kernel_x: Array2<T>,
    pub design_x: Array2<T>,
    /// Code embeddings, one row per sample.
    pub code: Option<Array2<T>>,
    /// Raw-unit targets.
    pub y_k: Array1<f64>,
    pub y_d: Array1<f64>,
    pub design_ids: Vec<String>,
}

impl<T: Real> PairBatch<T> {
    /// Builds a batch; embeddings are looked up only when `use_code_emb` is set.
    pub fn new(samples: &[&PairedSample], embeddings: Option<&EmbeddingTable>, use_code_emb: bool) -> Result<Self> {
        let code = if use_code_emb {
            let first = samples.first().ok_or(Error::EmptyBatch)?;
            let table = embeddings.ok_or_else(|| Error::MissingEmbedding(first.design_id.clone()))?;
            let mut rows = Vec::with_capacity(samples.len());
            for s in samples {
                rows.push(
                    table
                        .lookup(&s.design_id)
                        .map_err(|_| Error::MissingEmbedding(s.design_id.clone()))?,
                );
            }
            Some(rows)
        } else {
            None
        };
        Self::from_parts(samples, code.as_deref())
    }

    /// Builds a batch with explicitly supplied code-embedding rows.
    pub fn from_parts(samples: &[&PairedSample], code: Option<&[&[f32]]>) -> Result<Self> {
        let kernel = batch_graphs(samples, Side::Kernel)?;
        let design = batch_graphs(samples, Side::Design)?;
        let code = match code {
            None => None,
            Some(rows) => {
                if rows.len() != samples.len() {
                    return Err(Error::DimensionMismatch {
                        what: "code embedding rows",
                        expected: samples.len(),
                        got: rows.len(),
                    });
                }
                let dim = rows[0].len();
                let mut z = Array2::zeros((rows.len(), dim));
                for (i, row) in rows.iter().enumerate() {
                    if row.len() != dim {
                        return Err(Error::DimensionMismatch {
                            what: "code embedding",
                            expected: dim,
                            got: row.len(),
                        });
                    }
                    for (j, &v) in row.iter().enumerate() {
                        z[[i, j]] = T::of(v as f64);
                    }
                }
                Some(z)
            }
        };
        Ok(Self {
            kernel_x: kernel.features.mapv(T::of),
            design_x: design.features.mapv(T::of),
            kernel,
            design,
            code,
            y_k: samples.iter().map(|s| s.y_k).collect(),
            y_d: samples.iter().map(|s| s.y_d).collect(),
            design_ids: samples.iter().map(|s| s.design_id.clone()).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.y_d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y_d.is_empty()
    }

    /// Normalized `(y_k, y_d)` targets.
    pub fn targets(&self, normalizer: &Normalizer) -> (Array1<T>, Array1<T>) {
        (
            self.y_k.mapv(|y| T::of(normalizer.normalize(y))),
            self.y_d.mapv(|y| T::of(normalizer.normalize(y))),
        )
    }
}

/// Embeddings and normalized predictions for a batch.
#[derive(Debug, Clone)]
pub struct ForwardOutputs<T> {
    pub h_k: Array2<T>,
    pub h_d: Array2<T>,
    pub h_c: Option<Array2<T>>,
    pub h_delta: Array2<T>,
    pub y_k_hat: Option<Array1<T>>,
    pub delta_hat: Option<Array1<T>>,
    pub y_d_hat: Array1<T>,
}

#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    kernel: EncoderCache<T>,
    design: EncoderCache<T>,
    head_kernel: Option<MlpCache<T>>,
    head_delta: MlpCache<T>,
}

/// Raw-unit predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct Predictions {
    pub y_k: Option<Vec<f64>>,
    pub delta: Option<Vec<f64>>,
    pub y_d: Vec<f64>,
}

/// Twin graph encoders with a kernel head and a delta head.
///
/// With `use_diff` off, `head_kernel` is absent and `head_delta` regresses
/// the design target directly from the same fused embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferentialModel<T> {
    pub config: ModelConfig,
    pub enc_kernel: Encoder<T>,
    pub enc_design: Encoder<T>,
    pub head_kernel: Option<Mlp<T>>,
    pub head_delta: Mlp<T>,
    pub adapter: Option<Linear<T>>,
    pub normalizer: Normalizer,
}

impl<T: Real> DifferentialModel<T> {
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = &config;
        let enc_kernel = Encoder::new(c.backbone, NODE_FEATURE_DIM, c.hidden_dim, c.num_layers, c.dropout, &mut rng);
        let enc_design = Encoder::new(c.backbone, NODE_FEATURE_DIM, c.hidden_dim, c.num_layers, c.dropout, &mut rng);
        let head_kernel = c.use_diff.then(|| Mlp::new(c.hidden_dim, c.dropout, &mut rng));
        let head_delta = Mlp::new(c.delta_input_dim(), c.dropout, &mut rng);
        let adapter = c
            .use_code_emb
            .then(|| Linear::new(c.code_dim, c.hidden_dim, true, &mut rng));
        Ok(Self {
            config,
            enc_kernel,
            enc_design,
            head_kernel,
            head_delta,
            adapter,
            normalizer: Normalizer::IDENTITY,
        })
    }

    pub fn is_differential(&self) -> bool {
        self.head_kernel.is_some()
    }

    pub fn set_pna_stats(&mut self, stats: PnaStats) {
        self.enc_kernel.set_pna_stats(stats);
        self.enc_design.set_pna_stats(stats);
    }

    pub fn pna_stats(&self) -> Option<PnaStats> {
        self.enc_kernel.convs.first().and_then(|c| c.pna_stats())
    }

    /// Projects a raw code embedding into the hidden space.
    pub fn adapt_code_embedding(&self, z: &[f32]) -> Result<Array1<T>> {
        let adapter = self.adapter.as_ref().ok_or_else(|| {
            Error::Config("model was built without code embeddings".into())
        })?;
        let x = Array2::from_shape_fn((1, z.len()), |(_, j)| T::of(z[j] as f64));
        Ok(adapter.forward(&x)?.row(0).to_owned())
    }

    /// Forward pass for a batch. `rng` enables dropout (training mode).
    ///
    /// The kernel pathway runs first, so its outputs never depend on the
    /// design graph or the code embedding, even with dropout active.
    pub fn forward(
        &self,
        batch: &PairBatch<T>,
        mut rng: Option<&mut dyn RngCore>,
    ) -> Result<(ForwardOutputs<T>, ForwardCache<T>)> {
        let (h_k, kernel) = self.enc_kernel.forward(&batch.kernel, &batch.kernel_x, reborrow(&mut rng))?;
        let head_k = match &self.head_kernel {
            Some(head) => Some(head.forward(&h_k, reborrow(&mut rng))?),
            None => None,
        };
        let (h_d, design) = self.enc_design.forward(&batch.design, &batch.design_x, reborrow(&mut rng))?;
        let h_c = match (&self.adapter, &batch.code) {
            (Some(adapter), Some(z)) => Some(adapter.forward(z)?),
            (None, None) => None,
            (Some(_), None) => {
                return Err(Error::MissingEmbedding(batch.design_ids.first().cloned().unwrap_or_default()))
            }
            (None, Some(_)) => {
                return Err(Error::Config("code embeddings supplied to a model built without them".into()))
            }
        };
        let h_delta = match &h_c {
            Some(h_c) => concatenate![Axis(1), h_k, h_d, *h_c],
            None => concatenate![Axis(1), h_k, h_d],
        };
        let (delta_out, head_delta) = self.head_delta.forward(&h_delta, reborrow(&mut rng))?;

        let (y_k_hat, delta_hat, y_d_hat, head_kernel) = match head_k {
            Some((y_k, cache)) => {
                let y_d = &y_k + &delta_out;
                (Some(y_k), Some(delta_out), y_d, Some(cache))
            }
            None => (None, None, delta_out, None),
        };
        Ok((
            ForwardOutputs {
                h_k,
                h_d,
                h_c,
                h_delta,
                y_k_hat,
                delta_hat,
                y_d_hat,
            },
            ForwardCache {
                kernel,
                design,
                head_kernel,
                head_delta,
            },
        ))
    }

    /// Accumulates parameter gradients of the batch loss into `grad`.
    pub fn backward(&self, batch: &PairBatch<T>, cache: &ForwardCache<T>, dout: &OutputGrads<T>, grad: &mut Self) {
        let hidden = self.config.hidden_dim;
        let mut d_delta = dout.y_d.clone();
        if let Some(d) = &dout.delta {
            d_delta += d;
        }
        let dh_delta = self.head_delta.backward(&cache.head_delta, &d_delta, &mut grad.head_delta);
        let mut dh_k = dh_delta.slice(s![.., 0..hidden]).to_owned();
        let dh_d = dh_delta.slice(s![.., hidden..2 * hidden]).to_owned();

        if let (Some(head), Some(hc), Some(ghead)) =
            (&self.head_kernel, &cache.head_kernel, grad.head_kernel.as_mut())
        {
            let mut d_yk = dout.y_d.clone();
            if let Some(d) = &dout.y_k {
                d_yk += d;
            }
            dh_k += &head.backward(hc, &d_yk, ghead);
        }
        if let (Some(adapter), Some(z), Some(gadapter)) = (&self.adapter, &batch.code, grad.adapter.as_mut()) {
            let dh_c = dh_delta.slice(s![.., 2 * hidden..3 * hidden]).to_owned();
            adapter.backward_params(z, &dh_c, gadapter);
        }
        self.enc_design.backward(&batch.design, &cache.design, &dh_d, &mut grad.enc_design);
        self.enc_kernel.backward(&batch.kernel, &cache.kernel, &dh_k, &mut grad.enc_kernel);
    }

    /// Eval-mode forward for one sample; `embedding` must be given iff the
    /// model uses code embeddings.
    pub fn forward_pair(&self, sample: &PairedSample, embedding: Option<&[f32]>) -> Result<ForwardOutputs<T>> {
        if self.adapter.is_some() && embedding.is_none() {
            return Err(Error::MissingEmbedding(sample.design_id.clone()));
        }
        let rows = embedding.map(|e| [e]);
        let batch = PairBatch::from_parts(&[sample], rows.as_ref().map(|r| &r[..]))?;
        Ok(self.forward(&batch, None)?.0)
    }

    /// Eval-mode predictions in raw target units.
    pub fn predict(&self, batch: &PairBatch<T>) -> Result<Predictions> {
        let (out, _) = self.forward(batch, None)?;
        let n = self.normalizer;
        Ok(Predictions {
            y_k: out.y_k_hat.map(|v| v.iter().map(|&z| n.denormalize(z.as_f64())).collect()),
            delta: out
                .delta_hat
                .map(|v| v.iter().map(|&z| n.denormalize_delta(z.as_f64())).collect()),
            y_d: out.y_d_hat.iter().map(|&z| n.denormalize(z.as_f64())).collect(),
        })
    }

    /// Predicted design QoR in raw units.
    pub fn predict_design(&self, sample: &PairedSample, embedding: Option<&[f32]>) -> Result<f64> {
        let out = self.forward_pair(sample, embedding)?;
        Ok(self.normalizer.denormalize(out.y_d_hat[0].as_f64()))
    }

    fn design_head_name(&self) -> &'static str {
        if self.is_differential() {
            "head_delta"
        } else {
            "head_design"
        }
    }
}

impl<T: Real> Params<T> for DifferentialModel<T> {
    fn visit<'a>(&'a self, prefix: &str, f: &mut dyn FnMut(String, ArrayViewD<'a, T>)) {
        self.enc_kernel.visit(&join(prefix, "enc_kernel"), f);
        self.enc_design.visit(&join(prefix, "enc_design"), f);
        if let Some(h) = &self.head_kernel {
            h.visit(&join(prefix, "head_kernel"), f);
        }
        self.head_delta.visit(&join(prefix, self.design_head_name()), f);
        if let Some(a) = &self.adapter {
            a.visit(&join(prefix, "adapter"), f);
        }
    }

    fn visit_mut<'a>(&'a mut self, prefix: &str, f: &mut dyn FnMut(String, ArrayViewMutD<'a, T>)) {
        let head_name = self.design_head_name();
        self.enc_kernel.visit_mut(&join(prefix, "enc_kernel"), f);
        self.enc_design.visit_mut(&join(prefix, "enc_design"), f);
        if let Some(h) = &mut self.head_kernel {
            h.visit_mut(&join(prefix, "head_kernel"), f);
        }
        self.head_delta.visit_mut(&join(prefix, head_name), f);
        if let Some(a) = &mut self.adapter {
            a.visit_mut(&join(prefix, "adapter"), f);
        }
    }
}
