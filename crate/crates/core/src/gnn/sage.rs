use ndarray::{Array2, ArrayViewD, ArrayViewMutD};
use rand::RngCore;

use super::linear::Linear;
use super::params::{join, Params};
use super::check_dim;
use crate::data::GraphBatch;
use crate::{Real, Result};

/// GraphSAGE with mean aggregation:
/// `h'_i = W_self h_i + W_nbr mean_{j in N(i)} h_j + b`; empty mean is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SageConv<T> {
    pub self_linear: Linear<T>,
    pub neighbor_linear: Linear<T>,
}

#[derive(Debug, Clone)]
pub struct SageCache<T> {
    input: Array2<T>,
    neighbor_mean: Array2<T>,
}

fn neighbor_mean<T: Real>(batch: &GraphBatch, x: &Array2<T>) -> Array2<T> {
    let mut out = Array2::zeros(x.raw_dim());
    for i in 0..batch.num_nodes() {
        let nbrs = batch.in_neighbors(i);
        if nbrs.is_empty() {
            continue;
        }
        let w = T::one() / T::of(nbrs.len() as f64);
        let mut row = out.row_mut(i);
        for &j in nbrs {
            row.scaled_add(w, &x.row(j));
        }
    }
    out
}

impl<T: Real> SageConv<T> {
    pub fn new(input_dim: usize, output_dim: usize, rng: &mut dyn RngCore) -> Self {
        Self {
            self_linear: Linear::new(input_dim, output_dim, true, rng),
            neighbor_linear: Linear::new(input_dim, output_dim, false, rng),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.self_linear.input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.self_linear.output_dim()
    }

    pub fn forward(&self, batch: &GraphBatch, x: &Array2<T>) -> Result<(Array2<T>, SageCache<T>)> {
        check_dim("SAGE input", self.input_dim(), x.ncols())?;
        let mean = neighbor_mean(batch, x);
        let out = self.self_linear.forward(x)? + self.neighbor_linear.forward(&mean)?;
        Ok((
            out,
            SageCache {
                input: x.clone(),
                neighbor_mean: mean,
            },
        ))
    }

    pub fn backward(
        &self,
        batch: &GraphBatch,
        cache: &SageCache<T>,
        dy: &Array2<T>,
        grad: &mut Self,
    ) -> Array2<T> {
        let mut dx = self.self_linear.backward(&cache.input, dy, &mut grad.self_linear);
        let dmean = self
            .neighbor_linear
            .backward(&cache.neighbor_mean, dy, &mut grad.neighbor_linear);
        for i in 0..batch.num_nodes() {
            let nbrs = batch.in_neighbors(i);
            if nbrs.is_empty() {
                continue;
            }
            let w = T::one() / T::of(nbrs.len() as f64);
            let di = dmean.row(i);
            for &j in nbrs {
                dx.row_mut(j).scaled_add(w, &di);
            }
        }
        dx
    }
}

impl<T: Real> Params<T> for SageConv<T> {
    fn visit<'a>(&'a self, prefix: &str, f: &mut dyn FnMut(String, ArrayViewD<'a, T>)) {
        self.self_linear.visit(&join(prefix, "self"), f);
        self.neighbor_linear.visit(&join(prefix, "neighbor"), f);
    }

    fn visit_mut<'a>(&'a mut self, prefix: &str, f: &mut dyn FnMut(String, ArrayViewMutD<'a, T>)) {
        self.self_linear.visit_mut(&join(prefix, "self"), f);
        self.neighbor_linear.visit_mut(&join(prefix, "neighbor"), f);
    }
}
