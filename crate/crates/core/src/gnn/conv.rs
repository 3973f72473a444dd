use ndarray::{Array2, ArrayViewD, ArrayViewMutD};
use rand::RngCore;

use super::gat::{GatCache, GatConv};
use super::gcn::{GcnCache, GcnConv};
use super::params::Params;
use super::pna::{PnaCache, PnaConv, PnaStats};
use super::sage::{SageCache, SageConv};
use super::Backbone;
use crate::data::GraphBatch;
use crate::{Real, Result};

/// One graph convolution of any supported backbone.
#[derive(Debug, Clone, PartialEq)]
pub enum ConvLayer<T> {
    Gcn(GcnConv<T>),
    Sage(SageConv<T>),
    Gat(GatConv<T>),
    Pna(PnaConv<T>),
}

#[derive(Debug, Clone)]
pub enum ConvCache<T> {
    Gcn(GcnCache<T>),
    Sage(SageCache<T>),
    Gat(GatCache<T>),
    Pna(PnaCache<T>),
}

impl<T: Real> ConvLayer<T> {
    pub fn new(backbone: Backbone, input_dim: usize, output_dim: usize, rng: &mut dyn RngCore) -> Self {
        match backbone {
            Backbone::Gcn => ConvLayer::Gcn(GcnConv::new(input_dim, output_dim, rng)),
            Backbone::Sage => ConvLayer::Sage(SageConv::new(input_dim, output_dim, rng)),
            Backbone::Gat => ConvLayer::Gat(GatConv::new(input_dim, output_dim, rng)),
            Backbone::Pna => ConvLayer::Pna(PnaConv::new(input_dim, output_dim, rng)),
        }
    }

    pub fn backbone(&self) -> Backbone {
        match self {
            ConvLayer::Gcn(_) => Backbone::Gcn,
            ConvLayer::Sage(_) => Backbone::Sage,
            ConvLayer::Gat(_) => Backbone::Gat,
            ConvLayer::Pna(_) => Backbone::Pna,
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            ConvLayer::Gcn(l) => l.input_dim(),
            ConvLayer::Sage(l) => l.input_dim(),
            ConvLayer::Gat(l) => l.input_dim(),
            ConvLayer::Pna(l) => l.input_dim(),
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            ConvLayer::Gcn(l) => l.output_dim(),
            ConvLayer::Sage(l) => l.output_dim(),
            ConvLayer::Gat(l) => l.output_dim(),
            ConvLayer::Pna(l) => l.output_dim(),
        }
    }

    /// Sets the degree statistics; no-op for backbones that do not use them.
    pub fn set_pna_stats(&mut self, stats: PnaStats) {
        if let ConvLayer::Pna(l) = self {
            l.stats = Some(stats);
        }
    }

    pub fn pna_stats(&self) -> Option<PnaStats> {
        match self {
            ConvLayer::Pna(l) => l.stats,
            _ => None,
        }
    }

    pub fn forward(&self, batch: &GraphBatch, x: &Array2<T>) -> Result<(Array2<T>, ConvCache<T>)> {
        Ok(match self {
            ConvLayer::Gcn(l) => {
                let (y, c) = l.forward(batch, x)?;
                (y, ConvCache::Gcn(c))
            }
            ConvLayer::Sage(l) => {
                let (y, c) = l.forward(batch, x)?;
                (y, ConvCache::Sage(c))
            }
            ConvLayer::Gat(l) => {
                let (y, c) = l.forward(batch, x)?;
                (y, ConvCache::Gat(c))
            }
            ConvLayer::Pna(l) => {
                let (y, c) = l.forward(batch, x)?;
                (y, ConvCache::Pna(c))
            }
        })
    }

    /// `x` is the layer input of the matching forward call.
    pub fn backward(
        &self,
        batch: &GraphBatch,
        x: &Array2<T>,
        cache: &ConvCache<T>,
        dy: &Array2<T>,
        grad: &mut Self,
    ) -> Array2<T> {
        match (self, cache, grad) {
            (ConvLayer::Gcn(l), ConvCache::Gcn(c), ConvLayer::Gcn(g)) => l.backward(batch, c, dy, g),
            (ConvLayer::Sage(l), ConvCache::Sage(c), ConvLayer::Sage(g)) => l.backward(batch, c, dy, g),
            (ConvLayer::Gat(l), ConvCache::Gat(c), ConvLayer::Gat(g)) => l.backward(batch, c, dy, g),
            (ConvLayer::Pna(l), ConvCache::Pna(c), ConvLayer::Pna(g)) => {
                l.backward(batch, x, c, dy, g)
            }
            _ => panic!("layer, cache and gradient variants must match"),
        }
    }
}

impl<T: Real> Params<T> for ConvLayer<T> {
    fn visit<'a>(&'a self, prefix: &str, f: &mut dyn FnMut(String, ArrayViewD<'a, T>)) {
        match self {
            ConvLayer::Gcn(l) => l.visit(prefix, f),
            ConvLayer::Sage(l) => l.visit(prefix, f),
            ConvLayer::Gat(l) => l.visit(prefix, f),
            ConvLayer::Pna(l) => l.visit(prefix, f),
        }
    }

    fn visit_mut<'a>(&'a mut self, prefix: &str, f: &mut dyn FnMut(String, ArrayViewMutD<'a, T>)) {
        match self {
            ConvLayer::Gcn(l) => l.visit_mut(prefix, f),
            ConvLayer::Sage(l) => l.visit_mut(prefix, f),
            ConvLayer::Gat(l) => l.visit_mut(prefix, f),
            ConvLayer::Pna(l) => l.visit_mut(prefix, f),
        }
    }
}
