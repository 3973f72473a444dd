use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::FORMAT_VERSION;
use crate::{Error, Result};

/// Length of the raw node feature vector: 16-way one-hot op category,
/// scaled bitwidth, pragma flag.
pub const NODE_FEATURE_DIM: usize = OpCategory::COUNT + 2;

pub const MAX_BITWIDTH: u32 = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OpCategory {
    Arith,
    Mul,
    Div,
    Cmp,
    Logic,
    Shift,
    Load,
    Store,
    Phi,
    Branch,
    Call,
    Const,
    Cast,
    Alloca,
    Getptr,
    Other,
}

impl OpCategory {
    pub const COUNT: usize = 16;

    pub const ALL: [OpCategory; Self::COUNT] = [
        OpCategory::Arith,
        OpCategory::Mul,
        OpCategory::Div,
        OpCategory::Cmp,
        OpCategory::Logic,
        OpCategory::Shift,
        OpCategory::Load,
        OpCategory::Store,
        OpCategory::Phi,
        OpCategory::Branch,
        OpCategory::Call,
        OpCategory::Const,
        OpCategory::Cast,
        OpCategory::Alloca,
        OpCategory::Getptr,
        OpCategory::Other,
    ];

    /// Position of this category in the one-hot block.
    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    Data,
    Control,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeAttr {
    #[serde(rename = "op")]
    pub op_category: OpCategory,
    #[serde(rename = "bw")]
    pub bitwidth: u32,
    #[serde(rename = "pragma")]
    pub is_pragma_affected: bool,
}

impl NodeAttr {
    pub fn new(op_category: OpCategory, bitwidth: u32, is_pragma_affected: bool) -> Self {
        Self {
            op_category,
            bitwidth,
            is_pragma_affected,
        }
    }

    /// Writes the 18-dim raw feature row into `out`.
    pub fn write_features(&self, out: &mut [f64]) {
        debug_assert_eq!(out.len(), NODE_FEATURE_DIM);
        out.iter_mut().for_each(|v| *v = 0.0);
        out[self.op_category.index()] = 1.0;
        out[OpCategory::COUNT] = f64::from(self.bitwidth) / f64::from(MAX_BITWIDTH);
        out[OpCategory::COUNT + 1] = if self.is_pragma_affected { 1.0 } else { 0.0 };
    }

    pub fn features(&self) -> [f64; NODE_FEATURE_DIM] {
        let mut row = [0.0; NODE_FEATURE_DIM];
        self.write_features(&mut row);
        row
    }
}

/// Attributed directed control/data flow graph of one kernel or design.
#[derive(Debug, Clone, PartialEq)]
pub struct CdfgGraph {
    pub graph_id: String,
    pub nodes: Vec<NodeAttr>,
    pub edges: Vec<(usize, usize, EdgeKind)>,
}

/// On-disk JSON form of a [`CdfgGraph`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphFile {
    pub format_version: u32,
    pub graph_id: String,
    pub nodes: Vec<NodeAttr>,
    pub edges: Vec<(usize, usize, EdgeKind)>,
}

impl CdfgGraph {
    /// Builds a graph and checks its invariants.
    pub fn new(
        graph_id: impl Into<String>,
        nodes: Vec<NodeAttr>,
        edges: Vec<(usize, usize, EdgeKind)>,
    ) -> Result<Self> {
        let graph = Self {
            graph_id: graph_id.into(),
            nodes,
            edges,
        };
        graph.validate()?;
        Ok(graph)
    }

    pub fn validate(&self) -> Result<()> {
        if self.graph_id.is_empty() {
            return Err(Error::Format("graph_id must be nonempty".into()));
        }
        if self.nodes.is_empty() {
            return Err(Error::Format(format!(
                "graph {} has no nodes",
                self.graph_id
            )));
        }
        for node in &self.nodes {
            if node.bitwidth == 0 || node.bitwidth > MAX_BITWIDTH {
                return Err(Error::Format(format!(
                    "graph {}: bitwidth {} outside [1, {MAX_BITWIDTH}]",
                    self.graph_id, node.bitwidth
                )));
            }
        }
        let n = self.nodes.len();
        for &(src, dst, _) in &self.edges {
            if src >= n || dst >= n {
                return Err(Error::EdgeOutOfRange {
                    graph_id: self.graph_id.clone(),
                    src,
                    dst,
                    nodes: n,
                });
            }
        }
        Ok(())
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// In-degree of every node (messages flow `src -> dst`).
    pub fn in_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.nodes.len()];
        for &(_, dst, _) in &self.edges {
            deg[dst] += 1;
        }
        deg
    }

    pub fn to_file(&self) -> GraphFile {
        GraphFile {
            format_version: FORMAT_VERSION,
            graph_id: self.graph_id.clone(),
            nodes: self.nodes.clone(),
            edges: self.edges.clone(),
        }
    }

    pub fn from_file(file: GraphFile) -> Result<Self> {
        if file.format_version != FORMAT_VERSION {
            return Err(Error::FormatVersion {
                what: "graph",
                found: file.format_version,
                expected: FORMAT_VERSION,
            });
        }
        Self::new(file.graph_id, file.nodes, file.edges)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("graph serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: GraphFile =
            serde_json::from_str(text).map_err(|e| Error::json("<graph>", e))?;
        Self::from_file(file)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: GraphFile = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        Self::from_file(file)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }
}
