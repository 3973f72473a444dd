use ndarray::{Array1, Array2, ArrayViewD, ArrayViewMutD, Axis};
use rand::RngCore;

use super::linear::glorot;
use super::params::{join, Params};
use super::check_dim;
use crate::data::GraphBatch;
use crate::{Real, Result};

pub const GAT_HEADS: usize = 4;
pub const GAT_NEGATIVE_SLOPE: f64 = 0.2;

/// Multi-head graph attention with self-loops; heads are averaged.
///
/// For head `h`, `e_ij = LeakyReLU(a_dst . W h_i + a_src . W h_j)` over
/// `j in N(i) + i`, `alpha = softmax_j(e)`, and `h'_i = mean_h sum_j alpha_ij W h_j + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct GatConv<T> {
    /// `in x (heads * out)`, head-major columns.
    pub weight: Array2<T>,
    /// `heads x out`, applied to the target node.
    pub att_dst: Array2<T>,
    /// `heads x out`, applied to the source node.
    pub att_src: Array2<T>,
    pub bias: Array1<T>,
    heads: usize,
}

#[derive(Debug, Clone)]
pub struct GatCache<T> {
    input: Array2<T>,
    projected: Array2<T>,
    /// Pair `p` of node `i` spans `pair_ptr[i]..pair_ptr[i+1]`; the first pair is the self-loop.
    pair_ptr: Vec<usize>,
    pair_src: Vec<usize>,
    /// Pre-activation logits, `pairs x heads`.
    logits: Array2<T>,
    /// Attention coefficients, `pairs x heads`.
    alpha: Array2<T>,
}

impl<T: Real> GatCache<T> {
    /// Attention weights of `node` for `head`, self-loop first, then in-neighbors in edge order.
    pub fn attention(&self, node: usize, head: usize) -> Vec<T> {
        (self.pair_ptr[node]..self.pair_ptr[node + 1])
            .map(|p| self.alpha[[p, head]])
            .collect()
    }
}

fn leaky<T: Real>(u: T) -> T {
    if u > T::zero() {
        u
    } else {
        u * T::of(GAT_NEGATIVE_SLOPE)
    }
}

impl<T: Real> GatConv<T> {
    pub fn new(input_dim: usize, output_dim: usize, rng: &mut dyn RngCore) -> Self {
        Self::with_heads(input_dim, output_dim, GAT_HEADS, rng)
    }

    pub fn with_heads(input_dim: usize, output_dim: usize, heads: usize, rng: &mut dyn RngCore) -> Self {
        Self {
            weight: glorot(input_dim, heads * output_dim, rng),
            att_dst: glorot(heads, output_dim, rng),
            att_src: glorot(heads, output_dim, rng),
            bias: Array1::zeros(output_dim),
            heads,
        }
    }

    pub fn from_parts(weight: Array2<T>, att_dst: Array2<T>, att_src: Array2<T>, bias: Array1<T>) -> Self {
        let heads = att_dst.nrows();
        assert_eq!(weight.ncols(), heads * bias.len());
        Self {
            weight,
            att_dst,
            att_src,
            bias,
            heads,
        }
    }

    pub fn heads(&self) -> usize {
        self.heads
    }

    pub fn input_dim(&self) -> usize {
        self.weight.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.bias.len()
    }

    pub fn forward(&self, batch: &GraphBatch, x: &Array2<T>) -> Result<(Array2<T>, GatCache<T>)> {
        check_dim("GAT input", self.input_dim(), x.ncols())?;
        let n = batch.num_nodes();
        let heads = self.heads;
        let f = self.output_dim();
        let z = x.dot(&self.weight);

        // Per-node attention scores for each head.
        let mut s_dst = Array2::<T>::zeros((n, heads));
        let mut s_src = Array2::<T>::zeros((n, heads));
        for i in 0..n {
            for h in 0..heads {
                let zh = z.row(i);
                let zh = zh.slice(ndarray::s![h * f..(h + 1) * f]);
                s_dst[[i, h]] = zh.dot(&self.att_dst.row(h));
                s_src[[i, h]] = zh.dot(&self.att_src.row(h));
            }
        }

        let mut pair_ptr = Vec::with_capacity(n + 1);
        let mut pair_src = Vec::with_capacity(n + batch.edges.len());
        for i in 0..n {
            pair_ptr.push(pair_src.len());
            pair_src.push(i);
            pair_src.extend_from_slice(batch.in_neighbors(i));
        }
        pair_ptr.push(pair_src.len());

        let pairs = pair_src.len();
        let mut logits = Array2::<T>::zeros((pairs, heads));
        let mut alpha = Array2::<T>::zeros((pairs, heads));
        let mut out = Array2::<T>::zeros((n, f));
        let head_weight = T::one() / T::of(heads as f64);

        for i in 0..n {
            let range = pair_ptr[i]..pair_ptr[i + 1];
            for h in 0..heads {
                let mut max = T::neg_infinity();
                for p in range.clone() {
                    let u = s_dst[[i, h]] + s_src[[pair_src[p], h]];
                    logits[[p, h]] = u;
                    max = max.max(leaky(u));
                }
                let mut denom = T::zero();
                for p in range.clone() {
                    let e = (leaky(logits[[p, h]]) - max).exp();
                    alpha[[p, h]] = e;
                    denom += e;
                }
                let mut row = out.row_mut(i);
                for p in range.clone() {
                    alpha[[p, h]] /= denom;
                    let j = pair_src[p];
                    let zj = z.row(j);
                    row.scaled_add(alpha[[p, h]] * head_weight, &zj.slice(ndarray::s![h * f..(h + 1) * f]));
                }
            }
        }
        out += &self.bias;
        Ok((
            out,
            GatCache {
                input: x.clone(),
                projected: z,
                pair_ptr,
                pair_src,
                logits,
                alpha,
            },
        ))
    }

    pub fn backward(
        &self,
        batch: &GraphBatch,
        cache: &GatCache<T>,
        dy: &Array2<T>,
        grad: &mut Self,
    ) -> Array2<T> {
        let n = batch.num_nodes();
        let heads = self.heads;
        let f = self.output_dim();
        let z = &cache.projected;
        let head_weight = T::one() / T::of(heads as f64);
        let slope = T::of(GAT_NEGATIVE_SLOPE);

        grad.bias += &dy.sum_axis(Axis(0));
        let mut dz = Array2::<T>::zeros(z.raw_dim());
        let mut ds_dst = Array2::<T>::zeros((n, heads));
        let mut ds_src = Array2::<T>::zeros((n, heads));
        let mut dalpha = Vec::new();

        for i in 0..n {
            let range = cache.pair_ptr[i]..cache.pair_ptr[i + 1];
            let dyi = dy.row(i);
            for h in 0..heads {
                let cols = h * f..(h + 1) * f;
                dalpha.clear();
                let mut weighted = T::zero();
                for p in range.clone() {
                    let j = cache.pair_src[p];
                    let zj = z.row(j);
                    let da = head_weight * dyi.dot(&zj.slice(ndarray::s![cols.clone()]));
                    weighted += cache.alpha[[p, h]] * da;
                    dalpha.push(da);
                    let a = cache.alpha[[p, h]] * head_weight;
                    dz.row_mut(j)
                        .slice_mut(ndarray::s![cols.clone()])
                        .scaled_add(a, &dyi);
                }
                for (k, p) in range.clone().enumerate() {
                    let de = cache.alpha[[p, h]] * (dalpha[k] - weighted);
                    let du = if cache.logits[[p, h]] > T::zero() { de } else { de * slope };
                    ds_dst[[i, h]] += du;
                    ds_src[[cache.pair_src[p], h]] += du;
                }
            }
        }

        for i in 0..n {
            for h in 0..heads {
                let cols = h * f..(h + 1) * f;
                let zi = z.row(i).slice(ndarray::s![cols.clone()]).to_owned();
                let (gd, gs) = (ds_dst[[i, h]], ds_src[[i, h]]);
                grad.att_dst.row_mut(h).scaled_add(gd, &zi);
                grad.att_src.row_mut(h).scaled_add(gs, &zi);
                let mut dzi = dz.row_mut(i);
                let mut dzi = dzi.slice_mut(ndarray::s![cols]);
                dzi.scaled_add(gd, &self.att_dst.row(h));
                dzi.scaled_add(gs, &self.att_src.row(h));
            }
        }

        grad.weight += &cache.input.t().dot(&dz);
        dz.dot(&self.weight.t())
    }
}

impl<T: Real> Params<T> for GatConv<T> {
    fn visit<'a>(&'a self, prefix: &str, f: &mut dyn FnMut(String, ArrayViewD<'a, T>)) {
        f(join(prefix, "weight"), self.weight.view().into_dyn());
        f(join(prefix, "att_dst"), self.att_dst.view().into_dyn());
        f(join(prefix, "att_src"), self.att_src.view().into_dyn());
        f(join(prefix, "bias"), self.bias.view().into_dyn());
    }

    fn visit_mut<'a>(&'a mut self, prefix: &str, f: &mut dyn FnMut(String, ArrayViewMutD<'a, T>)) {
        f(join(prefix, "weight"), self.weight.view_mut().into_dyn());
        f(join(prefix, "att_dst"), self.att_dst.view_mut().into_dyn());
        f(join(prefix, "att_src"), self.att_src.view_mut().into_dyn());
        f(join(prefix, "bias"), self.bias.view_mut().into_dyn());
    }
}
