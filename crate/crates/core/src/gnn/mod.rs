//! Graph neural network building blocks with hand-written backward passes.
//!
//! Every layer exposes `forward`, returning its output plus a cache, and
//! `backward`, which accumulates parameter gradients into a structurally
//! identical instance of the layer (see [`Params`]) and returns the gradient
//! with respect to the layer input.

mod conv;
mod dropout;
mod encoder;
mod gat;
mod gcn;
mod linear;
mod mlp;
mod norm;
mod params;
mod pna;
mod pool;
mod sage;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use conv::{ConvCache, ConvLayer};
pub use dropout::Dropout;
pub use encoder::{Encoder, EncoderCache};
pub use gat::{GatCache, GatConv, GAT_HEADS, GAT_NEGATIVE_SLOPE};
pub use gcn::{GcnCache, GcnConv};
pub use linear::Linear;
pub use mlp::{Mlp, MlpCache, MLP_HIDDEN};
pub use norm::{GraphNorm, GraphNormCache, GRAPH_NORM_EPS};
pub(crate) use params::join;
pub use params::{copy_params, named_params, named_params_mut, num_params, zeros_like, Params};
pub use pna::{PnaCache, PnaConv, PnaStats, PNA_STD_EPS};
pub use pool::{sum_pool, sum_pool_backward};
pub use sage::{SageCache, SageConv};

/// Message-passing backbone used by both graph encoders.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Backbone {
    #[serde(rename = "GCN")]
    Gcn,
    #[serde(rename = "SAGE")]
    Sage,
    #[serde(rename = "GAT")]
    Gat,
    #[serde(rename = "PNA")]
    Pna,
}

impl Backbone {
    pub const ALL: [Backbone; 4] = [Backbone::Gcn, Backbone::Sage, Backbone::Gat, Backbone::Pna];

    pub fn name(self) -> &'static str {
        match self {
            Backbone::Gcn => "GCN",
            Backbone::Sage => "SAGE",
            Backbone::Gat => "GAT",
            Backbone::Pna => "PNA",
        }
    }
}

impl fmt::Display for Backbone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Backbone {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "GCN" => Ok(Backbone::Gcn),
            "SAGE" | "GRAPHSAGE" => Ok(Backbone::Sage),
            "GAT" => Ok(Backbone::Gat),
            "PNA" => Ok(Backbone::Pna),
            other => Err(format!("unknown backbone {other:?} (expected GCN, SAGE, GAT or PNA)")),
        }
    }
}

pub(crate) fn check_dim(what: &'static str, expected: usize, got: usize) -> crate::Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(crate::Error::DimensionMismatch {
            what,
            expected,
            got,
        })
    }
}

pub(crate) fn relu_inplace<T: crate::Real>(x: &mut ndarray::Array2<T>) {
    x.mapv_inplace(|v| if v > T::zero() { v } else { T::zero() });
}

/// Zeroes `grad` where the ReLU output was not positive.
pub(crate) fn relu_backward_inplace<T: crate::Real>(
    grad: &mut ndarray::Array2<T>,
    activated: &ndarray::Array2<T>,
) {
    ndarray::Zip::from(grad)
        .and(activated)
        .for_each(|g, &a| {
            if a <= T::zero() {
                *g = T::zero();
            }
        });
}

/// Reborrows an optional RNG for one nested call.
pub fn reborrow<'s>(rng: &'s mut Option<&mut dyn rand::RngCore>) -> Option<&'s mut dyn rand::RngCore> {
    match rng {
        Some(r) => Some(&mut **r),
        None => None,
    }
}
