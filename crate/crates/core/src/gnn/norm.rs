use ndarray::{Array1, Array2, ArrayViewD, ArrayViewMutD, Axis};

use super::params::{join, Params};
use crate::data::GraphBatch;
use crate::Real;

pub const GRAPH_NORM_EPS: f64 = 1e-5;

/// Per-graph, per-feature normalization with a learnable centering weight:
/// `gamma * (x - alpha * mean) / sqrt(var(x - alpha * mean) + eps) + beta`.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphNorm<T> {
    pub alpha: Array1<T>,
    pub gamma: Array1<T>,
    pub beta: Array1<T>,
    pub eps: f64,
}

#[derive(Debug, Clone)]
pub struct GraphNormCache<T> {
    /// `x - alpha * mean` per node.
    shifted: Array2<T>,
    /// `1 / sqrt(var + eps)` per graph.
    inv_std: Array2<T>,
    mean: Array2<T>,
}

impl<T: Real> GraphNorm<T> {
    pub fn new(dim: usize) -> Self {
        Self {
            alpha: Array1::ones(dim),
            gamma: Array1::ones(dim),
            beta: Array1::zeros(dim),
            eps: GRAPH_NORM_EPS,
        }
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    pub fn forward(&self, batch: &GraphBatch, x: &Array2<T>) -> (Array2<T>, GraphNormCache<T>) {
        let f = x.ncols();
        let eps = T::of(self.eps);
        let mut shifted = x.clone();
        let mut inv_std = Array2::zeros((batch.batch_size, f));
        let mut mean = Array2::zeros((batch.batch_size, f));
        let mut out = Array2::zeros(x.raw_dim());

        for g in 0..batch.batch_size {
            let range = batch.node_range(g);
            let n = T::of(range.len() as f64);
            let mu = x.slice(ndarray::s![range.clone(), ..]).sum_axis(Axis(0)) / n;
            let centre = &mu * &self.alpha;
            let mut block = shifted.slice_mut(ndarray::s![range.clone(), ..]);
            block -= &centre;
            let var = block.mapv(|v| v * v).sum_axis(Axis(0)) / n;
            let r = var.mapv(|v| T::one() / (v + eps).sqrt());
            let scale = &r * &self.gamma;
            let mut dst = out.slice_mut(ndarray::s![range, ..]);
            dst.assign(&block);
            dst *= &scale;
            dst += &self.beta;
            inv_std.row_mut(g).assign(&r);
            mean.row_mut(g).assign(&mu);
        }
        (
            out,
            GraphNormCache {
                shifted,
                inv_std,
                mean,
            },
        )
    }

    pub fn backward(
        &self,
        batch: &GraphBatch,
        cache: &GraphNormCache<T>,
        dy: &Array2<T>,
        grad: &mut Self,
    ) -> Array2<T> {
        let mut dx = Array2::zeros(dy.raw_dim());
        for g in 0..batch.batch_size {
            let range = batch.node_range(g);
            let n = T::of(range.len() as f64);
            let s = cache.shifted.slice(ndarray::s![range.clone(), ..]);
            let r = cache.inv_std.row(g);
            let dyg = dy.slice(ndarray::s![range.clone(), ..]);

            let s_hat = &s * &r;
            grad.gamma += &(&dyg * &s_hat).sum_axis(Axis(0));
            grad.beta += &dyg.sum_axis(Axis(0));

            let ds_hat = &dyg * &self.gamma;
            let proj = (&ds_hat * &s).sum_axis(Axis(0));
            let coef = &r.mapv(|v| v * v * v) * &proj / n;
            // ds = r * ds_hat - coef * s
            let ds = &ds_hat * &r - &(&s * &coef);
            let total = ds.sum_axis(Axis(0));
            grad.alpha -= &(&total * &cache.mean.row(g));
            let shift = &total * &self.alpha / n;
            let mut dst = dx.slice_mut(ndarray::s![range, ..]);
            dst.assign(&ds);
            dst -= &shift;
        }
        dx
    }
}

impl<T: Real> Params<T> for GraphNorm<T> {
    fn visit<'a>(&'a self, prefix: &str, f: &mut dyn FnMut(String, ArrayViewD<'a, T>)) {
        f(join(prefix, "alpha"), self.alpha.view().into_dyn());
        f(join(prefix, "gamma"), self.gamma.view().into_dyn());
        f(join(prefix, "beta"), self.beta.view().into_dyn());
    }

    fn visit_mut<'a>(&'a mut self, prefix: &str, f: &mut dyn FnMut(String, ArrayViewMutD<'a, T>)) {
        f(join(prefix, "alpha"), self.alpha.view_mut().into_dyn());
        f(join(prefix, "gamma"), self.gamma.view_mut().into_dyn());
        f(join(prefix, "beta"), self.beta.view_mut().into_dyn());
    }
}
