#![allow(dead_code)]

pub mod grad;

use std::sync::Arc;

use hls_delta::data::{CdfgGraph, Dataset, EdgeKind, NodeAttr, OpCategory, PairedSample, SplitAssignment, Target};
use hls_delta::gnn::{named_params, Params};
use hls_delta::Real;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random DAG-free digraph (edges in both directions allowed) with `n` nodes.
pub fn random_graph(id: &str, n: usize, edge_prob: f64, rng: &mut ChaCha8Rng) -> CdfgGraph {
    let nodes = (0..n)
        .map(|_| {
            NodeAttr::new(
                OpCategory::ALL[rng.random_range(0..OpCategory::COUNT)],
                [1, 8, 16, 32, 64, 512][rng.random_range(0..6)],
                rng.random_bool(0.4),
            )
        })
        .collect();
    let mut edges = Vec::new();
    for s in 0..n {
        for d in 0..n {
            if s != d && rng.random_bool(edge_prob) {
                let kind = if rng.random_bool(0.3) { EdgeKind::Control } else { EdgeKind::Data };
                edges.push((s, d, kind));
            }
        }
    }
    CdfgGraph::new(id, nodes, edges).unwrap()
}

pub fn random_pair(tag: &str, n_kernel: usize, n_design: usize, rng: &mut ChaCha8Rng) -> PairedSample {
    let kernel = random_graph(&format!("{tag}_k"), n_kernel, 0.3, rng);
    let design = random_graph(&format!("{tag}_d"), n_design, 0.3, rng);
    let y_k = rng.random_range(-1.5..1.5);
    let y_d = y_k + rng.random_range(-1.0..1.0);
    PairedSample {
        kernel_id: format!("{tag}_k"),
        design_id: tag.to_string(),
        kernel_graph: Arc::new(kernel),
        design_graph: Arc::new(design),
        y_k,
        y_d,
    }
}

/// Relabels nodes by `perm` (new index of old node `i` is `perm[i]`).
pub fn permute_graph(g: &CdfgGraph, perm: &[usize]) -> CdfgGraph {
    let mut nodes = g.nodes.clone();
    for (old, &new) in perm.iter().enumerate() {
        nodes[new] = g.nodes[old];
    }
    let edges = g.edges.iter().map(|&(s, d, k)| (perm[s], perm[d], k)).collect();
    CdfgGraph::new(g.graph_id.clone(), nodes, edges).unwrap()
}

pub fn dataset(samples: Vec<PairedSample>) -> Dataset {
    Dataset {
        target: Target::Ff,
        samples,
        embedding_file: None,
    }
}

pub fn split_all(samples: &[PairedSample]) -> SplitAssignment {
    let ids: Vec<String> = samples.iter().map(|s| s.design_id.clone()).collect();
    SplitAssignment {
        train: ids.clone(),
        val: ids,
        test: Vec::new(),
    }
}

/// Sets element `elem` of the `tensor`-th parameter array, returning the old value.
pub fn set_param<T: Real, P: Params<T>>(module: &mut P, tensor: usize, elem: usize, value: T) -> T {
    let mut k = 0;
    let mut old = T::zero();
    module.visit_mut("", &mut |_, mut view| {
        if k == tensor {
            let v = match view.as_slice_mut() {
                Some(slice) => &mut slice[elem],
                None => view.iter_mut().nth(elem).expect("element in range"),
            };
            old = *v;
            *v = value;
        }
        k += 1;
    });
    old
}

#[derive(Debug, Clone)]
pub struct GradReport {
    pub max_rel: f64,
    pub worst: String,
    pub checked: usize,
    /// Parameters whose loss is not smooth over the difference stencil.
    pub non_smooth: usize,
}

impl GradReport {
    pub fn non_smooth_fraction(&self) -> f64 {
        self.non_smooth as f64 / (self.checked + self.non_smooth).max(1) as f64
    }
}

pub fn rel_err(a: f64, n: f64, floor: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(floor)
}

/// Relative disagreement between stencils of width `h` and `2h` above which
/// the loss is treated as non-smooth (a ReLU, max or min kink inside the stencil).
const SMOOTHNESS_TOL: f64 = 1e-5;

/// Compares `analytic` against fourth-order central differences of `loss`
/// evaluated on `oracle` (which may have a different element type than
/// `analytic`). A step is accepted when the `h` and `2h` estimates agree;
/// otherwise `h / 10` is tried, and parameters failing both are counted as
/// non-smooth instead of compared.
pub fn compare_fd<A: Real, O: Real, G: Params<A>, M: Params<O>>(
    analytic: &G,
    oracle: &mut M,
    loss: &dyn Fn(&M) -> f64,
    h: f64,
    floor: f64,
) -> GradReport {
    let grads: Vec<(String, Vec<f64>)> = named_params(analytic)
        .into_iter()
        .map(|(n, v)| (n, v.iter().map(|x| x.as_f64()).collect()))
        .collect();
    let names: Vec<(String, usize)> = named_params(&*oracle).into_iter().map(|(n, v)| (n, v.len())).collect();
    assert_eq!(grads.len(), names.len(), "parameter lists differ");
    let mut report = GradReport {
        max_rel: 0.0,
        worst: String::new(),
        checked: 0,
        non_smooth: 0,
    };
    for (t, ((gname, g), (oname, len))) in grads.iter().zip(&names).enumerate() {
        assert_eq!(gname, oname);
        assert_eq!(g.len(), *len);
        for e in 0..*len {
            let x0 = set_param(oracle, t, e, O::zero());
            let mut at = |k: f64| {
                set_param(oracle, t, e, O::of(x0.as_f64() + k));
                loss(oracle)
            };
            let mut stencil = |h: f64| (at(-2.0 * h) - 8.0 * at(-h) + 8.0 * at(h) - at(2.0 * h)) / (12.0 * h);
            let mut estimate = None;
            for step in [h, h / 10.0] {
                let fd = stencil(step);
                if rel_err(fd, stencil(2.0 * step), floor) <= SMOOTHNESS_TOL {
                    estimate = Some(fd);
                    break;
                }
            }
            set_param(oracle, t, e, x0);
            let Some(fd) = estimate else {
                report.non_smooth += 1;
                continue;
            };
            let r = rel_err(g[e], fd, floor);
            if r > report.max_rel {
                report.max_rel = r;
                report.worst = format!("{gname}[{e}]: analytic {:e} vs fd {fd:e}", g[e]);
            }
            report.checked += 1;
        }
    }
    report
}
