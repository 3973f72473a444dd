use ndarray::{s, Array2, ArrayViewD, ArrayViewMutD};
use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::linear::Linear;
use super::params::Params;
use super::check_dim;
use crate::data::{CdfgGraph, GraphBatch};
use crate::{Error, Real, Result};

/// Added to the population variance under the square root of the std aggregator.
pub const PNA_STD_EPS: f64 = 1e-8;

const AGGREGATORS: usize = 4; // mean, max, min, std
const SCALERS: usize = 3; // identity, amplification, attenuation

/// Degree statistics of the training graphs used by the PNA scalers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PnaStats {
    /// Mean of `ln(in_degree + 1)` over all training-set nodes.
    pub delta_scale: f64,
}

impl PnaStats {
    pub fn from_graphs<'a>(graphs: impl IntoIterator<Item = &'a CdfgGraph>) -> Self {
        let (mut total, mut count) = (0.0, 0usize);
        for g in graphs {
            for d in g.in_degrees() {
                total += ((d + 1) as f64).ln();
                count += 1;
            }
        }
        Self {
            delta_scale: if count == 0 { 0.0 } else { total / count as f64 },
        }
    }
}

/// Principal neighbourhood aggregation without towers.
///
/// Each node concatenates its own features with {mean, max, min, std} of its
/// in-neighbours, each scaled by {1, ln(d+1)/delta, delta/ln(d+1)}, and maps
/// the `13 * F_in` vector linearly to the output. Nodes without in-neighbours
/// get an all-zero aggregation block.
#[derive(Debug, Clone, PartialEq)]
pub struct PnaConv<T> {
    pub linear: Linear<T>,
    pub stats: Option<PnaStats>,
    input_dim: usize,
}

#[derive(Debug, Clone)]
pub struct PnaCache<T> {
    expanded: Array2<T>,
    mean: Array2<T>,
    std: Array2<T>,
    argmax: Vec<usize>,
    argmin: Vec<usize>,
    scales: Vec<[T; SCALERS]>,
}

pub(crate) fn expanded_dim(input_dim: usize) -> usize {
    input_dim * (1 + AGGREGATORS * SCALERS)
}

impl<T: Real> PnaConv<T> {
    pub fn new(input_dim: usize, output_dim: usize, rng: &mut dyn RngCore) -> Self {
        Self {
            linear: Linear::new(expanded_dim(input_dim), output_dim, true, rng),
            stats: None,
            input_dim,
        }
    }

    pub fn from_linear(input_dim: usize, linear: Linear<T>, stats: Option<PnaStats>) -> Self {
        assert_eq!(linear.input_dim(), expanded_dim(input_dim));
        Self {
            linear,
            stats,
            input_dim,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.linear.output_dim()
    }

    pub fn forward(&self, batch: &GraphBatch, x: &Array2<T>) -> Result<(Array2<T>, PnaCache<T>)> {
        check_dim("PNA input", self.input_dim, x.ncols())?;
        let stats = self.stats.ok_or(Error::PnaStatsUnset)?;
        // Degenerate statistics (no edges in the training graphs) fall back to 1.
        let delta = if stats.delta_scale > 0.0 { stats.delta_scale } else { 1.0 };
        let n = batch.num_nodes();
        let f = self.input_dim;
        let eps = T::of(PNA_STD_EPS);

        let mut expanded = Array2::<T>::zeros((n, expanded_dim(f)));
        let mut mean = Array2::<T>::zeros((n, f));
        let mut std = Array2::<T>::zeros((n, f));
        let mut argmax = vec![0usize; n * f];
        let mut argmin = vec![0usize; n * f];
        let mut scales = vec![[T::zero(); SCALERS]; n];

        for i in 0..n {
            expanded.slice_mut(s![i, ..f]).assign(&x.row(i));
            let nbrs = batch.in_neighbors(i);
            if nbrs.is_empty() {
                continue;
            }
            let d = nbrs.len();
            let log_d = ((d + 1) as f64).ln();
            let sc = [T::one(), T::of(log_d / delta), T::of(delta / log_d)];
            scales[i] = sc;
            let inv_d = T::one() / T::of(d as f64);
            for c in 0..f {
                let (mut sum, mut hi, mut lo) = (T::zero(), nbrs[0], nbrs[0]);
                for &j in nbrs {
                    let v = x[[j, c]];
                    sum += v;
                    if v > x[[hi, c]] {
                        hi = j;
                    }
                    if v < x[[lo, c]] {
                        lo = j;
                    }
                }
                let mu = sum * inv_d;
                let var = nbrs.iter().map(|&j| (x[[j, c]] - mu).powi(2)).sum::<T>() * inv_d;
                let sd = (var + eps).sqrt();
                mean[[i, c]] = mu;
                std[[i, c]] = sd;
                argmax[i * f + c] = hi;
                argmin[i * f + c] = lo;
                let aggs = [mu, x[[hi, c]], x[[lo, c]], sd];
                for (k, scale) in sc.iter().enumerate() {
                    for (a, value) in aggs.iter().enumerate() {
                        expanded[[i, f + (k * AGGREGATORS + a) * f + c]] = *value * *scale;
                    }
                }
            }
        }

        let out = self.linear.forward(&expanded)?;
        Ok((
            out,
            PnaCache {
                expanded,
                mean,
                std,
                argmax,
                argmin,
                scales,
            },
        ))
    }

    pub fn backward(
        &self,
        batch: &GraphBatch,
        x: &Array2<T>,
        cache: &PnaCache<T>,
        dy: &Array2<T>,
        grad: &mut Self,
    ) -> Array2<T> {
        let f = self.input_dim;
        let n = batch.num_nodes();
        let dexp = self.linear.backward(&cache.expanded, dy, &mut grad.linear);
        let mut dx = dexp.slice(s![.., ..f]).to_owned();

        for i in 0..n {
            let nbrs = batch.in_neighbors(i);
            if nbrs.is_empty() {
                continue;
            }
            let inv_d = T::one() / T::of(nbrs.len() as f64);
            let sc = cache.scales[i];
            for c in 0..f {
                let mut dagg = [T::zero(); AGGREGATORS];
                for (k, scale) in sc.iter().enumerate() {
                    for (a, slot) in dagg.iter_mut().enumerate() {
                        *slot += dexp[[i, f + (k * AGGREGATORS + a) * f + c]] * *scale;
                    }
                }
                let [dmean, dmax, dmin, dstd] = dagg;
                let mu = cache.mean[[i, c]];
                let sd = cache.std[[i, c]];
                for &j in nbrs {
                    dx[[j, c]] += dmean * inv_d + dstd * (x[[j, c]] - mu) * inv_d / sd;
                }
                dx[[cache.argmax[i * f + c], c]] += dmax;
                dx[[cache.argmin[i * f + c], c]] += dmin;
            }
        }
        dx
    }
}

impl<T: Real> Params<T> for PnaConv<T> {
    fn visit<'a>(&'a self, prefix: &str, f: &mut dyn FnMut(String, ArrayViewD<'a, T>)) {
        self.linear.visit(prefix, f);
    }

    fn visit_mut<'a>(&'a mut self, prefix: &str, f: &mut dyn FnMut(String, ArrayViewMutD<'a, T>)) {
        self.linear.visit_mut(prefix, f);
    }
}
