mod common;

use common::{permute_graph, random_pair, rng};
use hls_delta::data::PairedSample;
use hls_delta::gnn::{Backbone, PnaStats};
use hls_delta::model::{DifferentialModel, ModelConfig, PairBatch};
use rand::seq::SliceRandom;
use rand::Rng;
use std::sync::Arc;

const TOL: f32 = 1e-5;

fn model(backbone: Backbone, seed: u64) -> DifferentialModel<f32> {
    let mut m = DifferentialModel::new(
        ModelConfig {
            backbone,
            hidden_dim: 16,
            code_dim: 4,
            ..ModelConfig::default()
        },
        seed,
    )
    .unwrap();
    m.set_pna_stats(PnaStats { delta_scale: 1.3 });
    m
}

fn close(a: f32, b: f32) -> bool {
    (a - b).abs() <= TOL * (1.0 + a.abs().max(b.abs()))
}

fn permuted(s: &PairedSample, r: &mut rand_chacha::ChaCha8Rng) -> PairedSample {
    let mut pk: Vec<usize> = (0..s.kernel_graph.num_nodes()).collect();
    let mut pd: Vec<usize> = (0..s.design_graph.num_nodes()).collect();
    pk.shuffle(r);
    pd.shuffle(r);
    PairedSample {
        kernel_graph: Arc::new(permute_graph(&s.kernel_graph, &pk)),
        design_graph: Arc::new(permute_graph(&s.design_graph, &pd)),
        ..s.clone()
    }
}

#[test]
fn predictions_are_permutation_invariant() {
    let mut r = rng(11);
    for backbone in Backbone::ALL {
        let m = model(backbone, 1);
        for i in 0..20 {
            let s = random_pair(&format!("p{i}"), r.random_range(2..15), r.random_range(2..20), &mut r);
            let z: Vec<f32> = (0..4).map(|_| r.random_range(-1.0..1.0)).collect();
            let a = m.forward_pair(&s, Some(&z)).unwrap();
            let b = m.forward_pair(&permuted(&s, &mut r), Some(&z)).unwrap();
            let (ak, bk) = (a.y_k_hat.unwrap()[0], b.y_k_hat.unwrap()[0]);
            let (ad, bd) = (a.y_d_hat[0], b.y_d_hat[0]);
            assert!(close(ak, bk), "{backbone:?} y_k {ak} vs {bk}");
            assert!(close(ad, bd), "{backbone:?} y_d {ad} vs {bd}");
        }
    }
}

#[test]
fn batched_matches_unbatched() {
    let mut r = rng(12);
    for backbone in Backbone::ALL {
        let m = model(backbone, 2);
        let pairs: Vec<PairedSample> = (0..7)
            .map(|i| random_pair(&format!("b{i}"), r.random_range(1..12), r.random_range(1..16), &mut r))
            .collect();
        let codes: Vec<Vec<f32>> = (0..7).map(|_| (0..4).map(|_| r.random_range(-1.0..1.0)).collect()).collect();
        let refs: Vec<&PairedSample> = pairs.iter().collect();
        let rows: Vec<&[f32]> = codes.iter().map(|c| c.as_slice()).collect();
        let batch = PairBatch::<f32>::from_parts(&refs, Some(&rows)).unwrap();
        let (out, _) = m.forward(&batch, None).unwrap();
        for (i, s) in pairs.iter().enumerate() {
            let single = m.forward_pair(s, Some(&codes[i])).unwrap();
            let (bk, sk) = (out.y_k_hat.as_ref().unwrap()[i], single.y_k_hat.unwrap()[0]);
            assert!(close(bk, sk), "{backbone:?} sample {i}: {bk} vs {sk}");
            assert!(close(out.y_d_hat[i], single.y_d_hat[0]), "{backbone:?} sample {i}");
            assert!(close(out.delta_hat.as_ref().unwrap()[i], single.delta_hat.unwrap()[0]));
        }
    }
}
