use ndarray::Array2;

use crate::data::GraphBatch;
use crate::Real;

/// Graph-level readout: row `g` is the sum of the node rows of graph `g`.
pub fn sum_pool<T: Real>(batch: &GraphBatch, x: &Array2<T>) -> Array2<T> {
    let mut out = Array2::zeros((batch.batch_size, x.ncols()));
    for (node, &g) in batch.membership.iter().enumerate() {
        let mut row = out.row_mut(g);
        row += &x.row(node);
    }
    out
}

/// Broadcasts pooled gradients back to every node of the graph.
pub fn sum_pool_backward<T: Real>(batch: &GraphBatch, dpooled: &Array2<T>) -> Array2<T> {
    let mut dx = Array2::zeros((batch.num_nodes(), dpooled.ncols()));
    for (node, &g) in batch.membership.iter().enumerate() {
        dx.row_mut(node).assign(&dpooled.row(g));
    }
    dx
}
