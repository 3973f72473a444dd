use ndarray::{Array2, ArrayViewD, ArrayViewMutD};
use rand::RngCore;

use super::conv::{ConvCache, ConvLayer};
use super::dropout::Dropout;
use super::norm::{GraphNorm, GraphNormCache};
use super::params::{join, Params};
use super::pna::PnaStats;
use super::pool::{sum_pool, sum_pool_backward};
use super::{check_dim, relu_backward_inplace, relu_inplace, Backbone};
use crate::data::GraphBatch;
use crate::{Real, Result};

/// Stack of `conv - GraphNorm - ReLU - Dropout` layers with a sum-pool readout.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoder<T> {
    pub convs: Vec<ConvLayer<T>>,
    pub norms: Vec<GraphNorm<T>>,
    pub dropout: Dropout,
}

#[derive(Debug, Clone)]
struct LayerCache<T> {
    input: Array2<T>,
    conv: ConvCache<T>,
    norm: GraphNormCache<T>,
    activated: Array2<T>,
    mask: Option<Array2<T>>,
}

#[derive(Debug, Clone)]
pub struct EncoderCache<T> {
    layers: Vec<LayerCache<T>>,
}

impl<T: Real> Encoder<T> {
    pub fn new(
        backbone: Backbone,
        input_dim: usize,
        hidden_dim: usize,
        num_layers: usize,
        dropout: f64,
        rng: &mut dyn RngCore,
    ) -> Self {
        let mut convs = Vec::with_capacity(num_layers);
        let mut norms = Vec::with_capacity(num_layers);
        for layer in 0..num_layers {
            let in_dim = if layer == 0 { input_dim } else { hidden_dim };
            convs.push(ConvLayer::new(backbone, in_dim, hidden_dim, rng));
            norms.push(GraphNorm::new(hidden_dim));
        }
        Self {
            convs,
            norms,
            dropout: Dropout::new(dropout),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.convs[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.convs.last().map_or(0, |c| c.output_dim())
    }

    pub fn set_pna_stats(&mut self, stats: PnaStats) {
        self.convs.iter_mut().for_each(|c| c.set_pna_stats(stats));
    }

    /// Node embeddings after the last layer, before pooling.
    pub fn node_embeddings(
        &self,
        batch: &GraphBatch,
        x: &Array2<T>,
        mut rng: Option<&mut dyn RngCore>,
    ) -> Result<(Array2<T>, EncoderCache<T>)> {
        check_dim("encoder input", self.input_dim(), x.ncols())?;
        let mut layers = Vec::with_capacity(self.convs.len());
        let mut h = x.clone();
        for (conv, norm) in self.convs.iter().zip(&self.norms) {
            let (pre, conv_cache) = conv.forward(batch, &h)?;
            let (mut activated, norm_cache) = norm.forward(batch, &pre);
            relu_inplace(&mut activated);
            let mut out = activated.clone();
            let mask = self.dropout.forward(&mut out, super::reborrow(&mut rng));
            layers.push(LayerCache {
                input: h,
                conv: conv_cache,
                norm: norm_cache,
                activated,
                mask,
            });
            h = out;
        }
        Ok((h, EncoderCache { layers }))
    }

    /// Graph embeddings, one row per graph of the batch.
    pub fn forward(
        &self,
        batch: &GraphBatch,
        x: &Array2<T>,
        rng: Option<&mut dyn RngCore>,
    ) -> Result<(Array2<T>, EncoderCache<T>)> {
        let (nodes, cache) = self.node_embeddings(batch, x, rng)?;
        Ok((sum_pool(batch, &nodes), cache))
    }

    /// Backpropagates pooled-embedding gradients into `grad`.
    pub fn backward(&self, batch: &GraphBatch, cache: &EncoderCache<T>, dpooled: &Array2<T>, grad: &mut Self) {
        let mut dh = sum_pool_backward(batch, dpooled);
        for (layer, lc) in cache.layers.iter().enumerate().rev() {
            Dropout::backward(&mut dh, lc.mask.as_ref());
            relu_backward_inplace(&mut dh, &lc.activated);
            let dpre = self.norms[layer].backward(batch, &lc.norm, &dh, &mut grad.norms[layer]);
            dh = self.convs[layer].backward(batch, &lc.input, &lc.conv, &dpre, &mut grad.convs[layer]);
        }
    }
}

impl<T: Real> Params<T> for Encoder<T> {
    fn visit<'a>(&'a self, prefix: &str, f: &mut dyn FnMut(String, ArrayViewD<'a, T>)) {
        for (i, (conv, norm)) in self.convs.iter().zip(&self.norms).enumerate() {
            conv.visit(&join(prefix, &format!("layers.{i}.conv")), f);
            norm.visit(&join(prefix, &format!("layers.{i}.norm")), f);
        }
    }

    fn visit_mut<'a>(&'a mut self, prefix: &str, f: &mut dyn FnMut(String, ArrayViewMutD<'a, T>)) {
        for (i, (conv, norm)) in self.convs.iter_mut().zip(self.norms.iter_mut()).enumerate() {
            conv.visit_mut(&join(prefix, &format!("layers.{i}.conv")), f);
            norm.visit_mut(&join(prefix, &format!("layers.{i}.norm")), f);
        }
    }
}
