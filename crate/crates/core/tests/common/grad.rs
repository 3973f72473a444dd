#![allow(dead_code)]

use super::{compare_fd, random_graph, random_pair, rng, GradReport};
use hls_delta::data::{GraphBatch, PairedSample};
use hls_delta::gnn::{copy_params, zeros_like, Backbone, Encoder, PnaStats};
use hls_delta::model::{loss_and_grads, DifferentialModel, ModelConfig, PairBatch};
use hls_delta::Real;
use ndarray::Array2;
use rand::{Rng, SeedableRng};

pub const FD_STEP: f64 = 1e-4;
/// Upper bound on the share of parameters skipped as non-smooth.
pub const MAX_NON_SMOOTH: f64 = 0.005;
/// Denominator floor of the relative error: gradients below it are compared
/// absolutely, since exact zeros (biases ahead of GraphNorm) only carry
/// rounding noise.
pub const FLOOR_F64: f64 = 1e-4;
pub const FLOOR_F32: f64 = 1e-3;

pub fn encoder_loss<T: Real>(enc: &Encoder<T>, batch: &GraphBatch, weights: &Array2<f64>) -> f64 {
    let x = batch.features.mapv(T::of);
    let (pooled, _) = enc.forward(batch, &x, None).unwrap();
    pooled.iter().zip(weights.iter()).map(|(p, w)| p.as_f64() * w).sum()
}

pub fn encoder_grads<T: Real>(enc: &Encoder<T>, batch: &GraphBatch, weights: &Array2<f64>) -> Encoder<T> {
    let x = batch.features.mapv(T::of);
    let (_, cache) = enc.forward(batch, &x, None).unwrap();
    let mut grad = zeros_like(enc);
    enc.backward(batch, &cache, &weights.mapv(T::of), &mut grad);
    grad
}

pub fn encoder_setup(backbone: Backbone, seed: u64) -> (Encoder<f64>, GraphBatch, Array2<f64>) {
    let mut r = rng(seed);
    let g1 = random_graph("a", 7, 0.35, &mut r);
    let g2 = random_graph("b", 4, 0.4, &mut r);
    let batch = GraphBatch::from_graphs(&[&g1, &g2]).unwrap();
    let mut enc = Encoder::<f64>::new(backbone, 18, 5, 2, 0.0, &mut r);
    if backbone == Backbone::Pna {
        enc.set_pna_stats(PnaStats::from_graphs([&g1, &g2]));
    }
    randomize_norms(&mut enc, &mut r);
    let weights = Array2::from_shape_fn((2, 5), |_| r.random_range(-1.0..1.0));
    (enc, batch, weights)
}

/// Moves GraphNorm parameters off their initial values so their gradients are exercised generically.
pub fn randomize_norms(enc: &mut Encoder<f64>, r: &mut rand_chacha::ChaCha8Rng) {
    for norm in &mut enc.norms {
        norm.alpha.mapv_inplace(|_| r.random_range(0.3..1.2));
        norm.gamma.mapv_inplace(|_| r.random_range(0.5..1.5));
        norm.beta.mapv_inplace(|_| r.random_range(-0.5..0.5));
    }
}

pub fn describe(label: &str, r: &GradReport) -> String {
    format!(
        "{label}: max rel err {:.3e} over {} params, {} non-smooth ({})",
        r.max_rel, r.checked, r.non_smooth, r.worst
    )
}

pub fn print(label: &str, r: &GradReport) {
    println!("{}", describe(label, r));
    assert!(r.non_smooth_fraction() <= MAX_NON_SMOOTH, "{label}: too many non-smooth parameters");
}


pub fn encoder_report_f64(backbone: Backbone, seed: u64) -> GradReport {
    let (enc, batch, w) = encoder_setup(backbone, seed);
    let grad = encoder_grads(&enc, &batch, &w);
    let mut oracle = enc.clone();
    compare_fd(&grad, &mut oracle, &|e: &Encoder<f64>| encoder_loss(e, &batch, &w), FD_STEP, FLOOR_F64)
}

/// f32 analytic gradients against differences taken on an f64 copy.
pub fn encoder_report_f32(backbone: Backbone, seed: u64) -> GradReport {
    let (enc64, batch, w) = encoder_setup(backbone, seed);
    let mut enc32 = Encoder::<f32>::new(backbone, 18, 5, 2, 0.0, &mut rng(0));
    copy_params(&enc64, &mut enc32).unwrap();
    if let Some(stats) = enc64.convs[0].pna_stats() {
        enc32.set_pna_stats(stats);
    }
    let grad = encoder_grads(&enc32, &batch, &w);
    let mut oracle = enc64.clone();
    copy_params(&enc32, &mut oracle).unwrap();
    compare_fd(&grad, &mut oracle, &|e: &Encoder<f64>| encoder_loss(e, &batch, &w), FD_STEP, FLOOR_F32)
}

pub fn model_report_f32(backbone: Backbone, seed: u64) -> GradReport {
    let pairs = toy_pairs(seed);
    let code = code_rows(seed + 1, 5);
    let cfg = model_config(backbone, true, true, 0.0);
    let model32 = build_model::<f32>(cfg.clone(), &pairs);
    let batch32 = model_batch::<f32>(&pairs, &code, true);
    let grad = model_grads(&model32, &batch32, None);
    let mut oracle = build_model::<f64>(cfg, &pairs);
    copy_params(&model32, &mut oracle).unwrap();
    let batch64 = model_batch::<f64>(&pairs, &code, true);
    compare_fd(&grad, &mut oracle, &|m: &DifferentialModel<f64>| model_loss(m, &batch64, None), FD_STEP, FLOOR_F32)
}

pub fn toy_pairs(seed: u64) -> Vec<PairedSample> {
    let mut r = rng(seed);
    vec![random_pair("p0", 6, 9, &mut r), random_pair("p1", 5, 8, &mut r)]
}

pub fn code_rows(seed: u64, dim: usize) -> Vec<Vec<f32>> {
    let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..2).map(|_| (0..dim).map(|_| r.random_range(-1.0f32..1.0)).collect()).collect()
}

pub fn model_batch<T: Real>(pairs: &[PairedSample], code: &[Vec<f32>], use_code: bool) -> PairBatch<T> {
    let refs: Vec<&PairedSample> = pairs.iter().collect();
    let rows: Vec<&[f32]> = code.iter().map(|v| v.as_slice()).collect();
    PairBatch::from_parts(&refs, use_code.then_some(rows.as_slice())).unwrap()
}

pub fn model_loss<T: Real>(model: &DifferentialModel<T>, batch: &PairBatch<T>, dropout_seed: Option<u64>) -> f64 {
    let mut r = dropout_seed.map(rand_chacha::ChaCha8Rng::seed_from_u64);
    let (out, _) = model.forward(batch, r.as_mut().map(|r| r as &mut dyn rand::RngCore)).unwrap();
    let (yk, yd) = batch.targets(&model.normalizer);
    loss_and_grads(&out, &yk, &yd).0.as_f64()
}

pub fn model_grads<T: Real>(model: &DifferentialModel<T>, batch: &PairBatch<T>, dropout_seed: Option<u64>) -> DifferentialModel<T> {
    let mut r = dropout_seed.map(rand_chacha::ChaCha8Rng::seed_from_u64);
    let (out, cache) = model.forward(batch, r.as_mut().map(|r| r as &mut dyn rand::RngCore)).unwrap();
    let (yk, yd) = batch.targets(&model.normalizer);
    let (_, dout) = loss_and_grads(&out, &yk, &yd);
    let mut grad = zeros_like(model);
    model.backward(batch, &cache, &dout, &mut grad);
    grad
}

pub fn model_config(backbone: Backbone, use_diff: bool, use_code_emb: bool, dropout: f64) -> ModelConfig {
    ModelConfig {
        backbone,
        hidden_dim: 6,
        code_dim: if use_code_emb { 5 } else { 0 },
        use_diff,
        use_code_emb,
        dropout,
        ..ModelConfig::default()
    }
}

pub fn build_model<T: Real>(cfg: ModelConfig, pairs: &[PairedSample]) -> DifferentialModel<T> {
    let mut m = DifferentialModel::<T>::new(cfg, 5).unwrap();
    if m.config.backbone == Backbone::Pna {
        m.set_pna_stats(PnaStats::from_graphs(
            pairs.iter().flat_map(|p| [p.kernel_graph.as_ref(), p.design_graph.as_ref()]),
        ));
    }
    m
}

pub fn model_report_f64(cfg: ModelConfig, dropout_seed: Option<u64>) -> GradReport {
    let pairs = toy_pairs(21);
    let code = code_rows(3, 5);
    let use_code = cfg.use_code_emb;
    let model = build_model::<f64>(cfg, &pairs);
    let batch = model_batch::<f64>(&pairs, &code, use_code);
    let grad = model_grads(&model, &batch, dropout_seed);
    let mut oracle = model.clone();
    compare_fd(&grad, &mut oracle, &|m: &DifferentialModel<f64>| model_loss(m, &batch, dropout_seed), FD_STEP, FLOOR_F64)
}
