//! Normalized adjacency operators for message passing.

use crate::error::Result;
use crate::graph::Graph;
use crate::matrix::SparseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormMode {
    /// D^-1 (A + sI)
    Row,
    /// D^-1/2 (A + sI) D^-1/2
    Symmetric,
}

/// Build the normalized adjacency. Degrees are computed after self-loop
/// insertion. A degree-0 row without self-loops stays all-zero.
pub fn normalized_adjacency(
    graph: &Graph,
    mode: NormMode,
    self_loops: bool,
) -> Result<SparseMatrix> {
    let n = graph.num_nodes;
    let mut triplets: Vec<(usize, usize, f64)> =
        Vec::with_capacity(graph.num_directed_edges() + if self_loops { n } else { 0 });
    let mut degree = vec![0.0f64; n];
    for u in 0..n {
        degree[u] = graph.degree(u) as f64 + if self_loops { 1.0 } else { 0.0 };
    }
    for u in 0..n {
        if self_loops {
            triplets.push((u, u, 1.0));
        }
        for &v in graph.neighbors(u) {
            triplets.push((u, v, 1.0));
        }
    }
    for t in &mut triplets {
        let (i, j, ref mut v) = *t;
        match mode {
            NormMode::Row => {
                if degree[i] > 0.0 {
                    *v /= degree[i];
                }
            }
            NormMode::Symmetric => {
                if degree[i] > 0.0 && degree[j] > 0.0 {
                    *v /= degree[i].sqrt() * degree[j].sqrt();
                }
            }
        }
    }
    SparseMatrix::from_triplets(n, n, triplets)
}
