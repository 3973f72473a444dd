use std::ops::Range;

use ndarray::Array2;

use super::{CdfgGraph, EdgeKind, NodeAttr, PairedSample, NODE_FEATURE_DIM};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Kernel,
    Design,
}

/// Disjoint union of several graphs.
///
/// Node rows of graph `g` occupy `offsets[g]..offsets[g + 1]`; edge indices
/// are shifted into that range, so no edge crosses graph boundaries.
#[derive(Debug, Clone)]
pub struct GraphBatch {
    pub features: Array2<f64>,
    pub edges: Vec<(usize, usize)>,
    pub edge_kinds: Vec<EdgeKind>,
    pub membership: Vec<usize>,
    pub offsets: Vec<usize>,
    pub batch_size: usize,
    graph_ids: Vec<String>,
    nodes: Vec<NodeAttr>,
    edge_offsets: Vec<usize>,
    in_ptr: Vec<usize>,
    in_src: Vec<usize>,
}

pub fn batch_graphs(samples: &[&PairedSample], side: Side) -> Result<GraphBatch> {
    let graphs: Vec<&CdfgGraph> = samples
        .iter()
        .map(|s| match side {
            Side::Kernel => s.kernel_graph.as_ref(),
            Side::Design => s.design_graph.as_ref(),
        })
        .collect();
    GraphBatch::from_graphs(&graphs)
}

impl GraphBatch {
    pub fn from_graphs(graphs: &[&CdfgGraph]) -> Result<Self> {
        if graphs.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let total_nodes: usize = graphs.iter().map(|g| g.num_nodes()).sum();
        let total_edges: usize = graphs.iter().map(|g| g.num_edges()).sum();

        let mut features = Array2::zeros((total_nodes, NODE_FEATURE_DIM));
        let mut edges = Vec::with_capacity(total_edges);
        let mut edge_kinds = Vec::with_capacity(total_edges);
        let mut membership = Vec::with_capacity(total_nodes);
        let mut offsets = Vec::with_capacity(graphs.len() + 1);
        let mut edge_offsets = Vec::with_capacity(graphs.len() + 1);
        let mut nodes = Vec::with_capacity(total_nodes);

        let mut base = 0;
        for (slot, g) in graphs.iter().enumerate() {
            offsets.push(base);
            edge_offsets.push(edges.len());
            for (i, node) in g.nodes.iter().enumerate() {
                let mut row = features.row_mut(base + i);
                node.write_features(row.as_slice_mut().expect("row-major features"));
                membership.push(slot);
            }
            nodes.extend_from_slice(&g.nodes);
            for &(src, dst, kind) in &g.edges {
                edges.push((base + src, base + dst));
                edge_kinds.push(kind);
            }
            base += g.num_nodes();
        }
        offsets.push(base);
        edge_offsets.push(edges.len());

        // CSR of incoming neighbours, sources kept in edge order.
        let mut in_ptr = vec![0usize; total_nodes + 1];
        for &(_, dst) in &edges {
            in_ptr[dst + 1] += 1;
        }
        for i in 0..total_nodes {
            in_ptr[i + 1] += in_ptr[i];
        }
        let mut fill = in_ptr.clone();
        let mut in_src = vec![0usize; edges.len()];
        for &(src, dst) in &edges {
            in_src[fill[dst]] = src;
            fill[dst] += 1;
        }

        Ok(Self {
            features,
            edges,
            edge_kinds,
            membership,
            offsets,
            batch_size: graphs.len(),
            graph_ids: graphs.iter().map(|g| g.graph_id.clone()).collect(),
            nodes,
            edge_offsets,
            in_ptr,
            in_src,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.membership.len()
    }

    pub fn node_range(&self, graph: usize) -> Range<usize> {
        self.offsets[graph]..self.offsets[graph + 1]
    }

    /// Sources of edges ending at `node`.
    pub fn in_neighbors(&self, node: usize) -> &[usize] {
        &self.in_src[self.in_ptr[node]..self.in_ptr[node + 1]]
    }

    pub fn in_degree(&self, node: usize) -> usize {
        self.in_ptr[node + 1] - self.in_ptr[node]
    }

    /// Recovers the original graphs.
    pub fn unbatch(&self) -> Vec<CdfgGraph> {
        (0..self.batch_size)
            .map(|g| {
                let base = self.offsets[g];
                let nodes = self.nodes[self.node_range(g)].to_vec();
                let er = self.edge_offsets[g]..self.edge_offsets[g + 1];
                let edges = self.edges[er.clone()]
                    .iter()
                    .zip(&self.edge_kinds[er])
                    .map(|(&(s, d), &k)| (s - base, d - base, k))
                    .collect();
                CdfgGraph {
                    graph_id: self.graph_ids[g].clone(),
                    nodes,
                    edges,
                }
            })
            .collect()
    }
}
