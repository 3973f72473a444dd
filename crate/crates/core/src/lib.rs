//! Differential QoR prediction for high-level synthesis kernel/design pairs.
//!
//! A design's QoR target is decomposed into the pragma-free kernel baseline
//! and a pragma-induced delta. Two parameter-disjoint graph encoders embed the
//! kernel and design CDFGs, a kernel head regresses the baseline, and a delta
//! head (optionally fed a frozen code-LLM embedding through an adapter)
//! regresses the change. The design prediction is their sum.
//!
//! Module map:
//! - [`data`]: graph/manifest formats, range validation, splits, batching
//! - [`gnn`]: message-passing layers, GraphNorm, pooling, MLP blocks
//! - [`model`]: the two-head model, loss, normalizer, checkpoints
//! - [`embed`]: the precomputed code-embedding table
//! - [`train`]: Adam, plateau scheduler, training loop, metrics
//! - [`synth`]: synthetic paired benchmark with a closed-form oracle
//! - [`cli`]: command-line entry points

pub mod cli;
pub mod data;
pub mod embed;
pub mod error;
pub mod gnn;
pub mod model;
pub mod real;
pub mod synth;
pub mod train;

pub use error::{Error, Result};
pub use real::Real;
