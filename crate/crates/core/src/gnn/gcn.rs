use ndarray::{Array2, ArrayViewD, ArrayViewMutD};
use rand::RngCore;

use super::linear::Linear;
use super::params::Params;
use super::check_dim;
use crate::data::GraphBatch;
use crate::{Real, Result};

/// Symmetric-normalized graph convolution with self-loops:
/// `h'_i = W * sum_{j in N(i) + i} h_j / sqrt(d_i d_j) + b`, where `d` is the
/// in-degree plus one.
#[derive(Debug, Clone, PartialEq)]
pub struct GcnConv<T> {
    pub linear: Linear<T>,
}

#[derive(Debug, Clone)]
pub struct GcnCache<T> {
    aggregated: Array2<T>,
}

fn inv_sqrt_degrees<T: Real>(batch: &GraphBatch) -> Vec<T> {
    (0..batch.num_nodes())
        .map(|i| T::one() / T::of((batch.in_degree(i) + 1) as f64).sqrt())
        .collect()
}

/// `A_hat x` where `A_hat = D^-1/2 (A + I) D^-1/2`.
fn propagate<T: Real>(batch: &GraphBatch, x: &Array2<T>, inv: &[T]) -> Array2<T> {
    let mut out = Array2::zeros(x.raw_dim());
    for i in 0..batch.num_nodes() {
        let mut row = out.row_mut(i);
        row.scaled_add(inv[i] * inv[i], &x.row(i));
        for &j in batch.in_neighbors(i) {
            row.scaled_add(inv[i] * inv[j], &x.row(j));
        }
    }
    out
}

/// `A_hat^T dy`.
fn propagate_transpose<T: Real>(batch: &GraphBatch, dy: &Array2<T>, inv: &[T]) -> Array2<T> {
    let mut out = Array2::zeros(dy.raw_dim());
    for i in 0..batch.num_nodes() {
        let di = dy.row(i);
        out.row_mut(i).scaled_add(inv[i] * inv[i], &di);
        for &j in batch.in_neighbors(i) {
            out.row_mut(j).scaled_add(inv[i] * inv[j], &di);
        }
    }
    out
}

impl<T: Real> GcnConv<T> {
    pub fn new(input_dim: usize, output_dim: usize, rng: &mut dyn RngCore) -> Self {
        Self {
            linear: Linear::new(input_dim, output_dim, true, rng),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.linear.input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.linear.output_dim()
    }

    pub fn forward(&self, batch: &GraphBatch, x: &Array2<T>) -> Result<(Array2<T>, GcnCache<T>)> {
        check_dim("GCN input", self.input_dim(), x.ncols())?;
        let inv = inv_sqrt_degrees(batch);
        let aggregated = propagate(batch, x, &inv);
        let out = self.linear.forward(&aggregated)?;
        Ok((out, GcnCache { aggregated }))
    }

    pub fn backward(
        &self,
        batch: &GraphBatch,
        cache: &GcnCache<T>,
        dy: &Array2<T>,
        grad: &mut Self,
    ) -> Array2<T> {
        let dagg = self.linear.backward(&cache.aggregated, dy, &mut grad.linear);
        propagate_transpose(batch, &dagg, &inv_sqrt_degrees(batch))
    }
}

impl<T: Real> Params<T> for GcnConv<T> {
    fn visit<'a>(&'a self, prefix: &str, f: &mut dyn FnMut(String, ArrayViewD<'a, T>)) {
        self.linear.visit(prefix, f);
    }

    fn visit_mut<'a>(&'a mut self, prefix: &str, f: &mut dyn FnMut(String, ArrayViewMutD<'a, T>)) {
        self.linear.visit_mut(prefix, f);
    }
}
