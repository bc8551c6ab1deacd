//! Edge-restricted homophily mask built from proxy pseudo-labels.
//!
//! The mask shares the adjacency sparsity pattern; the value on edge
//! (i, j) is the inner product of the two endpoints' predicted class
//! distributions, i.e. the probability both endpoints carry the same label.

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::matrix::{DenseMatrix, SparseMatrix};
use std::fmt::Write as _;

/// Per-node predicted class probabilities, one simplex row per node.
#[derive(Debug, Clone)]
pub struct PseudoLabels {
    pub probs: DenseMatrix,
}

impl PseudoLabels {
    pub fn new(probs: DenseMatrix) -> Result<Self> {
        for i in 0..probs.rows {
            check_simplex(probs.row(i))?;
        }
        Ok(PseudoLabels { probs })
    }

    /// One-hot rows from hard labels (used by oracle-style checks).
    pub fn from_labels(labels: &[usize], num_classes: usize) -> Result<Self> {
        let mut probs = DenseMatrix::zeros(labels.len(), num_classes);
        for (i, &l) in labels.iter().enumerate() {
            if l >= num_classes {
                return Err(Error::InvalidArgument(format!("label {l} out of range")));
            }
            probs.set(i, l, 1.0);
        }
        Ok(PseudoLabels { probs })
    }
}

fn check_simplex(row: &[f64]) -> Result<()> {
    let mut sum = 0.0;
    for &v in row {
        if !(0.0..=1.0 + 1e-9).contains(&v) {
            return Err(Error::InvalidArgument(format!(
                "probability {v} outside [0, 1]"
            )));
        }
        sum += v;
    }
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "probability row sums to {sum}, expected 1"
        )));
    }
    Ok(())
}

/// Inner product of two probability rows: the chance both endpoints draw
/// the same class.
pub fn homophily_strength(zi: &[f64], zj: &[f64]) -> Result<f64> {
    if zi.len() != zj.len() {
        return Err(Error::ShapeMismatch(format!(
            "probability rows of length {} and {}",
            zi.len(),
            zj.len()
        )));
    }
    check_simplex(zi)?;
    check_simplex(zj)?;
    Ok(zi.iter().zip(zj).map(|(a, b)| a * b).sum())
}

/// Homophily strengths on the adjacency pattern. Symmetric by
/// construction: each unordered pair is computed once.
#[derive(Debug, Clone)]
pub struct HomophilyMask {
    pub mask: SparseMatrix,
}

impl HomophilyMask {
    /// Mean strength over undirected edges.
    pub fn mean_edge_strength(&self) -> f64 {
        if self.mask.nnz() == 0 {
            return 0.0;
        }
        self.mask.values.iter().sum::<f64>() / self.mask.nnz() as f64
    }

    pub fn frobenius_dist(&self, other: &HomophilyMask) -> f64 {
        self.mask.to_dense().frobenius_dist(&other.mask.to_dense())
    }

    /// TSV export: "src<TAB>dst<TAB>strength", one undirected edge per line.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.mask.rows {
            for idx in self.mask.row_range(i) {
                let j = self.mask.col_indices[idx];
                if i < j {
                    writeln!(out, "{i}\t{j}\t{}", self.mask.values[idx]).unwrap();
                }
            }
        }
        out
    }
}

/// Evaluate the strength on every edge of the graph.
pub fn build_mask(graph: &Graph, pseudo: &PseudoLabels) -> Result<HomophilyMask> {
    if pseudo.probs.rows != graph.num_nodes {
        return Err(Error::ShapeMismatch(format!(
            "{} pseudo-label rows for {} nodes",
            pseudo.probs.rows, graph.num_nodes
        )));
    }
    let mut triplets = Vec::with_capacity(graph.num_directed_edges());
    for (u, v) in graph.undirected_edges() {
        let s = homophily_strength(pseudo.probs.row(u), pseudo.probs.row(v))?;
        triplets.push((u, v, s));
        triplets.push((v, u, s));
    }
    let mask = SparseMatrix::from_triplets(graph.num_nodes, graph.num_nodes, triplets)?;
    Ok(HomophilyMask { mask })
}
