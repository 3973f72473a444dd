//! Paired kernel/design graph data: formats, validation, splits, batching.

mod batch;
pub(crate) mod dataset;
mod graph;
mod ranges;
mod split;

pub use batch::{batch_graphs, GraphBatch, Side};
pub use dataset::{load_dataset, write_dataset, Dataset, ManifestFile, PairedSample, SampleRecord};
pub use graph::{CdfgGraph, EdgeKind, GraphFile, NodeAttr, OpCategory, NODE_FEATURE_DIM};
pub use ranges::{validate_ranges, Quantity, RangeWarning, Target, TargetRanges};
pub use split::{split_design_level, split_kernel_level, SplitAssignment};

/// Version tag written into every JSON document this crate emits.
pub const FORMAT_VERSION: u32 = 1;
