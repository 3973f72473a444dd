//! Synthetic paired datasets with a closed-form QoR oracle.
//!
//! Kernel targets are `c0 + c1 * n` for an `n`-node kernel graph; design
//! deltas are `c2 * u + c3 * p + c2 * pipeline` plus optional Gaussian
//! noise, where `u`, `p` and `pipeline` are the unroll factor, partition
//! factor and pipeline flag encoded into the design graph.

mod experiment;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{write_dataset, CdfgGraph, Dataset, EdgeKind, NodeAttr, OpCategory, PairedSample, Target};
use crate::embed::EmbeddingTable;
use crate::{Error, Result};

pub use experiment::{differential_advantage_experiment, AdvantageReport, AdvantageRun};

pub const MAX_PRAGMA_FACTOR: u32 = 16;
pub const SURROGATE_SOURCE_MODEL: &str = "sha256-surrogate";
pub const EMBEDDING_FILE_NAME: &str = "embeddings.bin";

const KERNEL_OPS: [OpCategory; 10] = [
    OpCategory::Arith,
    OpCategory::Mul,
    OpCategory::Cmp,
    OpCategory::Logic,
    OpCategory::Shift,
    OpCategory::Load,
    OpCategory::Store,
    OpCategory::Getptr,
    OpCategory::Const,
    OpCategory::Phi,
];
const BITWIDTHS: [u32; 4] = [8, 16, 32, 64];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PragmaSpec {
    pub unroll_factor: u32,
    pub pipeline: bool,
    pub partition_factor: u32,
}

impl PragmaSpec {
    pub const NONE: PragmaSpec = PragmaSpec {
        unroll_factor: 1,
        pipeline: false,
        partition_factor: 1,
    };

    pub fn validate(&self) -> Result<()> {
        for (what, v) in [("unroll_factor", self.unroll_factor), ("partition_factor", self.partition_factor)] {
            if !(1..=MAX_PRAGMA_FACTOR).contains(&v) {
                return Err(Error::Config(format!("{what} {v} outside [1, {MAX_PRAGMA_FACTOR}]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    pub n_kernels: usize,
    pub designs_per_kernel: usize,
    /// Inclusive kernel node-count range.
    pub min_nodes: usize,
    pub max_nodes: usize,
    pub seed: u64,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub noise_std: f64,
    /// Target whose value ranges the generated data should respect.
    pub target: Target,
    pub unroll_choices: Vec<u32>,
    pub partition_choices: Vec<u32>,
    pub edge_prob: f64,
    /// Width of the surrogate code embeddings; 0 disables them.
    pub embedding_dim: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_kernels: 20,
            designs_per_kernel: 50,
            min_nodes: 8,
            max_nodes: 28,
            seed: 0,
            c0: 1000.0,
            c1: 100.0,
            c2: 1.0,
            c3: 1.0,
            noise_std: 0.0,
            target: Target::Ff,
            unroll_choices: vec![1, 2, 4, 8],
            partition_choices: vec![1, 2, 4, 8],
            edge_prob: 0.3,
            embedding_dim: 64,
        }
    }
}

fn span(values: &[u32]) -> (f64, f64) {
    let lo = values.iter().copied().min().unwrap_or(1) as f64;
    let hi = values.iter().copied().max().unwrap_or(1) as f64;
    (lo, hi)
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_kernels < 2 || self.designs_per_kernel < 2 {
            return Err(Error::Config("n_kernels and designs_per_kernel must be at least 2".into()));
        }
        if self.min_nodes == 0 || self.min_nodes > self.max_nodes {
            return Err(Error::Config(format!(
                "invalid node range [{}, {}]",
                self.min_nodes, self.max_nodes
            )));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::Config(format!("noise_std must be >= 0, got {}", self.noise_std)));
        }
        if !(0.0..=1.0).contains(&self.edge_prob) {
            return Err(Error::Config(format!("edge_prob {} outside [0, 1]", self.edge_prob)));
        }
        if self.unroll_choices.is_empty() || self.partition_choices.is_empty() {
            return Err(Error::Config("pragma factor choices must be nonempty".into()));
        }
        for &u in &self.unroll_choices {
            for &p in &self.partition_choices {
                PragmaSpec {
                    unroll_factor: u,
                    pipeline: false,
                    partition_factor: p,
                }
                .validate()?;
            }
        }
        Ok(())
    }

    /// Noise-free `[min, max]` of the kernel target.
    pub fn kernel_bounds(&self) -> (f64, f64) {
        let a = self.c0 + self.c1 * self.min_nodes as f64;
        let b = self.c0 + self.c1 * self.max_nodes as f64;
        (a.min(b), a.max(b))
    }

    /// Noise-free `[min, max]` of the delta.
    pub fn delta_bounds(&self) -> (f64, f64) {
        let (u0, u1) = span(&self.unroll_choices);
        let (p0, p1) = span(&self.partition_choices);
        let corners = [
            self.c2 * u0 + self.c3 * p0,
            self.c2 * u1 + self.c3 * p1,
            self.c2 * u0 + self.c3 * p1,
            self.c2 * u1 + self.c3 * p0,
        ];
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for c in corners {
            for pipe in [0.0, self.c2] {
                lo = lo.min(c + pipe);
                hi = hi.max(c + pipe);
            }
        }
        (lo, hi)
    }

    /// Ratio of the kernel-target span to the delta span.
    pub fn spread_ratio(&self) -> f64 {
        let (k0, k1) = self.kernel_bounds();
        let (d0, d1) = self.delta_bounds();
        (k1 - k0) / (d1 - d0)
    }

    /// Whether noise-free targets fall inside the configured target's ranges.
    pub fn fits_target_ranges(&self) -> bool {
        let r = self.target.ranges();
        let (k0, k1) = self.kernel_bounds();
        let (d0, d1) = self.delta_bounds();
        let inside = |(lo, hi): (f64, f64), a: f64, b: f64| lo <= a && b <= hi;
        inside(r.kernel, k0, k1) && inside(r.delta, d0, d1) && inside(r.design, k0 + d0, k1 + d1)
    }
}

#[derive(Debug, Clone)]
pub struct SynthDataset {
    pub dataset: Dataset,
    pub pragmas: Vec<PragmaSpec>,
    pub embeddings: Option<EmbeddingTable>,
}

/// Deterministic `dim`-wide vector in `[-1, 1)` derived from a SHA-256 of the design id.
pub fn surrogate_embedding(design_id: &str, dim: usize) -> Vec<f32> {
    let digest = Sha256::digest(design_id.as_bytes());
    let seed: [u8; 32] = digest.into();
    let mut rng = ChaCha8Rng::from_seed(seed);
    (0..dim).map(|_| rng.random_range(-1.0f32..1.0)).collect()
}

fn random_kernel(id: &str, n: usize, edge_prob: f64, rng: &mut ChaCha8Rng) -> Result<CdfgGraph> {
    let nodes = (0..n)
        .map(|_| {
            NodeAttr::new(
                KERNEL_OPS[rng.random_range(0..KERNEL_OPS.len())],
                BITWIDTHS[rng.random_range(0..BITWIDTHS.len())],
                false,
            )
        })
        .collect();
    let mut edges = Vec::new();
    for src in 0..n {
        for dst in src + 1..n {
            if rng.random_bool(edge_prob) {
                let kind = if rng.random_bool(0.2) { EdgeKind::Control } else { EdgeKind::Data };
                edges.push((src, dst, kind));
            }
        }
    }
    CdfgGraph::new(id, nodes, edges)
}

/// Design graph: the kernel with a contiguous region flagged when pipelined,
/// plus `p` banks, each one load feeding a chain of `u - 1` arithmetic nodes,
/// driven from the region.
pub fn apply_pragmas(kernel: &CdfgGraph, id: &str, spec: PragmaSpec, rng: &mut ChaCha8Rng) -> Result<CdfgGraph> {
    spec.validate()?;
    let n = kernel.num_nodes();
    let len = (n / 4).max(1);
    let start = rng.random_range(0..=n - len);
    let region = start..start + len;

    let mut nodes = kernel.nodes.clone();
    if spec.pipeline {
        for node in &mut nodes[region.clone()] {
            node.is_pragma_affected = true;
        }
    }
    let mut edges = kernel.edges.clone();
    for _ in 0..spec.partition_factor {
        let load = nodes.len();
        nodes.push(NodeAttr::new(OpCategory::Load, 32, true));
        edges.push((rng.random_range(region.clone()), load, EdgeKind::Data));
        let mut prev = load;
        for _ in 1..spec.unroll_factor {
            let next = nodes.len();
            nodes.push(NodeAttr::new(OpCategory::Arith, 32, true));
            edges.push((prev, next, EdgeKind::Data));
            prev = next;
        }
    }
    CdfgGraph::new(id, nodes, edges)
}

/// Generates the dataset; identical configurations give identical output.
pub fn generate(cfg: &SynthConfig) -> Result<SynthDataset> {
    cfg.validate()?;
    let noise = Normal::new(0.0, cfg.noise_std).map_err(|e| Error::Config(e.to_string()))?;
    let mut samples = Vec::with_capacity(cfg.n_kernels * cfg.designs_per_kernel);
    let mut pragmas = Vec::with_capacity(samples.capacity());
    let mut embeddings = (cfg.embedding_dim > 0).then(|| EmbeddingTable::new(SURROGATE_SOURCE_MODEL, cfg.embedding_dim));

    for k in 0..cfg.n_kernels {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(k as u64);
        let kernel_id = format!("k{k:03}");
        let n = rng.random_range(cfg.min_nodes..=cfg.max_nodes);
        let kernel = Arc::new(random_kernel(&kernel_id, n, cfg.edge_prob, &mut rng)?);
        let y_k = cfg.c0 + cfg.c1 * n as f64;
        for d in 0..cfg.designs_per_kernel {
            let design_id = format!("{kernel_id}_d{d:03}");
            let spec = PragmaSpec {
                unroll_factor: cfg.unroll_choices[rng.random_range(0..cfg.unroll_choices.len())],
                pipeline: rng.random_bool(0.5),
                partition_factor: cfg.partition_choices[rng.random_range(0..cfg.partition_choices.len())],
            };
            let design = apply_pragmas(&kernel, &design_id, spec, &mut rng)?;
            let mut delta = cfg.c2 * spec.unroll_factor as f64
                + cfg.c3 * spec.partition_factor as f64
                + if spec.pipeline { cfg.c2 } else { 0.0 };
            if cfg.noise_std > 0.0 {
                delta += noise.sample(&mut rng);
            }
            if let Some(table) = &mut embeddings {
                table.insert(design_id.clone(), &surrogate_embedding(&design_id, cfg.embedding_dim))?;
            }
            samples.push(PairedSample {
                kernel_id: kernel_id.clone(),
                design_id,
                kernel_graph: Arc::clone(&kernel),
                design_graph: Arc::new(design),
                y_k,
                y_d: y_k + delta,
            });
            pragmas.push(spec);
        }
    }
    Ok(SynthDataset {
        dataset: Dataset {
            target: cfg.target,
            samples,
            embedding_file: None,
        },
        pragmas,
        embeddings,
    })
}

impl SynthDataset {
    /// Writes manifest, graphs and (if present) the surrogate embedding file
    /// into `dir`. Returns the manifest path.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let emb = self.embeddings.as_ref().map(|_| EMBEDDING_FILE_NAME);
        let manifest = write_dataset(&self.dataset, dir, emb)?;
        if let Some(table) = &self.embeddings {
            table.write(&dir.join(EMBEDDING_FILE_NAME))?;
        }
        Ok(manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::validate_ranges;

    fn small() -> SynthConfig {
        SynthConfig {
            n_kernels: 3,
            designs_per_kernel: 4,
            embedding_dim: 8,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn oracle_arithmetic() {
        let cfg = SynthConfig {
            n_kernels: 2,
            designs_per_kernel: 3,
            min_nodes: 5,
            max_nodes: 5,
            ..SynthConfig::default()
        };
        let data = generate(&cfg).unwrap();
        for (s, spec) in data.dataset.samples.iter().zip(&data.pragmas) {
            assert_eq!(s.y_k, 1500.0);
            let pipe = if spec.pipeline { 1.0 } else { 0.0 };
            assert_eq!(s.delta(), (spec.unroll_factor + spec.partition_factor) as f64 + pipe);
            let extra = (spec.unroll_factor * spec.partition_factor) as usize;
            assert_eq!(s.design_graph.num_nodes(), 5 + extra);
        }
    }

    #[test]
    fn null_pragma_leaves_target() {
        let cfg = SynthConfig {
            c2: 0.0,
            c3: 0.0,
            unroll_choices: vec![1],
            partition_choices: vec![1],
            ..small()
        };
        let data = generate(&cfg).unwrap();
        assert!(data.dataset.samples.iter().all(|s| s.y_d == s.y_k));
    }

    #[test]
    fn kernels_are_dags_in_topological_order() {
        let data = generate(&small()).unwrap();
        for s in &data.dataset.samples {
            assert!(s.kernel_graph.edges.iter().all(|(a, b, _)| a < b));
            assert!(s.design_graph.edges.iter().all(|(a, b, _)| a < b));
        }
    }

    #[test]
    fn deterministic_files() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        generate(&small()).unwrap().write(a.path()).unwrap();
        generate(&small()).unwrap().write(b.path()).unwrap();
        for rel in ["manifest.json", "embeddings.bin", "embeddings.bin.json", "graphs/k000_d001.json"] {
            assert_eq!(
                std::fs::read(a.path().join(rel)).unwrap(),
                std::fs::read(b.path().join(rel)).unwrap(),
                "{rel}"
            );
        }
    }

    #[test]
    fn defaults_fit_ff_ranges_with_wide_spread() {
        let cfg = SynthConfig::default();
        assert!(cfg.fits_target_ranges());
        assert!(cfg.spread_ratio() >= 100.0, "{}", cfg.spread_ratio());
        let data = generate(&cfg).unwrap();
        assert!(validate_ranges(&data.dataset, Target::Ff).is_empty());
    }

    #[test]
    fn surrogate_embedding_is_stable() {
        let a = surrogate_embedding("k000_d000", 16);
        assert_eq!(a, surrogate_embedding("k000_d000", 16));
        assert_ne!(a, surrogate_embedding("k000_d001", 16));
        assert!(a.iter().all(|v| (-1.0..1.0).contains(v)));
    }
}
