//! Immutable attributed graph with neighborhood queries and homophily
//! metrics.
//!
//! The adjacency is stored once per direction in compressed row form, so a
//! neighbor scan is O(deg). The graph is undirected with no self-loops and
//! never mutated after construction.

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use std::collections::BTreeSet;

/// Train/val/test node-index sets. Pairwise disjoint.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Splits {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl Splits {
    pub fn validate(&self, num_nodes: usize) -> Result<()> {
        let mut seen = vec![false; num_nodes];
        for (name, set) in [
            ("train", &self.train),
            ("val", &self.val),
            ("test", &self.test),
        ] {
            for &i in set {
                if i >= num_nodes {
                    return Err(Error::InvalidArgument(format!(
                        "{name} split index {i} out of range (N={num_nodes})"
                    )));
                }
                if seen[i] {
                    return Err(Error::InvalidArgument(format!(
                        "node {i} appears in more than one split"
                    )));
                }
                seen[i] = true;
            }
        }
        Ok(())
    }
}

/// Immutable attributed graph: symmetric 0/1 adjacency in compressed row
/// form (no stored self-loops), dense features, integer labels, splits.
#[derive(Debug, Clone)]
pub struct Graph {
    pub num_nodes: usize,
    pub num_classes: usize,
    adj_offsets: Vec<usize>,
    adj_neighbors: Vec<usize>,
    pub features: DenseMatrix,
    pub labels: Vec<usize>,
    pub splits: Splits,
}

/// Nodes at shortest-path distance in [1, k] from `node`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HopNeighborhood {
    pub node: usize,
    pub k: usize,
    pub members: BTreeSet<usize>,
}

impl Graph {
    /// Build from an undirected edge list (each unordered pair once).
    /// Rejects self-loops, duplicate edges, and out-of-range ids.
    pub fn new(
        num_nodes: usize,
        num_classes: usize,
        edges: &[(usize, usize)],
        features: DenseMatrix,
        labels: Vec<usize>,
        splits: Splits,
    ) -> Result<Self> {
        if features.rows != num_nodes {
            return Err(Error::ShapeMismatch(format!(
                "features has {} rows, expected {num_nodes}",
                features.rows
            )));
        }
        if labels.len() != num_nodes {
            return Err(Error::ShapeMismatch(format!(
                "labels has {} entries, expected {num_nodes}",
                labels.len()
            )));
        }
        for (i, &l) in labels.iter().enumerate() {
            if l >= num_classes {
                return Err(Error::InvalidArgument(format!(
                    "label {l} of node {i} out of range (C={num_classes})"
                )));
            }
        }
        splits.validate(num_nodes)?;

        let mut directed: Vec<(usize, usize)> = Vec::with_capacity(edges.len() * 2);
        for &(u, v) in edges {
            if u >= num_nodes || v >= num_nodes {
                return Err(Error::InvalidArgument(format!(
                    "edge ({u}, {v}) out of range (N={num_nodes})"
                )));
            }
            if u == v {
                return Err(Error::InvalidArgument(format!("self-loop at node {u}")));
            }
            directed.push((u, v));
            directed.push((v, u));
        }
        directed.sort_unstable();
        for w in directed.windows(2) {
            if w[0] == w[1] {
                return Err(Error::InvalidArgument(format!(
                    "duplicate edge ({}, {})",
                    w[0].0, w[0].1
                )));
            }
        }
        let mut adj_offsets = vec![0usize; num_nodes + 1];
        let mut adj_neighbors = Vec::with_capacity(directed.len());
        for &(u, v) in &directed {
            adj_offsets[u + 1] += 1;
            adj_neighbors.push(v);
        }
        for i in 0..num_nodes {
            adj_offsets[i + 1] += adj_offsets[i];
        }
        Ok(Graph {
            num_nodes,
            num_classes,
            adj_offsets,
            adj_neighbors,
            features,
            labels,
            splits,
        })
    }

    #[inline]
    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.adj_neighbors[self.adj_offsets[node]..self.adj_offsets[node + 1]]
    }

    #[inline]
    pub fn degree(&self, node: usize) -> usize {
        self.adj_offsets[node + 1] - self.adj_offsets[node]
    }

    /// Directed edge-endpoint count (twice the undirected edge count).
    pub fn num_directed_edges(&self) -> usize {
        self.adj_neighbors.len()
    }

    pub fn num_undirected_edges(&self) -> usize {
        self.adj_neighbors.len() / 2
    }

    /// Undirected edges, each unordered pair once with src < dst.
    pub fn undirected_edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.num_undirected_edges());
        for u in 0..self.num_nodes {
            for &v in self.neighbors(u) {
                if u < v {
                    out.push((u, v));
                }
            }
        }
        out
    }

    pub fn isolated_node_count(&self) -> usize {
        (0..self.num_nodes).filter(|&i| self.degree(i) == 0).count()
    }

    fn check_node(&self, node: usize) -> Result<()> {
        if node >= self.num_nodes {
            return Err(Error::InvalidNode {
                node,
                num_nodes: self.num_nodes,
            });
        }
        Ok(())
    }

    /// BFS shortest-path distances from `node`, capped at `k` hops.
    /// Returns the set of nodes at distance in [1, k].
    pub fn khop_neighborhood(&self, node: usize, k: usize) -> Result<HopNeighborhood> {
        self.check_node(node)?;
        if k < 1 {
            return Err(Error::InvalidArgument("k must be >= 1".into()));
        }
        let mut dist = vec![usize::MAX; self.num_nodes];
        dist[node] = 0;
        let mut frontier = vec![node];
        let mut members = BTreeSet::new();
        for d in 1..=k {
            let mut next = Vec::new();
            for &u in &frontier {
                for &v in self.neighbors(u) {
                    if dist[v] == usize::MAX {
                        dist[v] = d;
                        members.insert(v);
                        next.push(v);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
        Ok(HopNeighborhood { node, k, members })
    }

    /// Fraction of 1-hop neighbors sharing `node`'s label.
    pub fn node_homophily(&self, node: usize) -> Result<f64> {
        self.check_node(node)?;
        let nbrs = self.neighbors(node);
        if nbrs.is_empty() {
            return Err(Error::UndefinedHomophily(node));
        }
        let same = nbrs
            .iter()
            .filter(|&&j| self.labels[j] == self.labels[node])
            .count();
        Ok(same as f64 / nbrs.len() as f64)
    }

    /// Mean node homophily over non-isolated nodes. Isolated nodes are
    /// excluded from the average.
    pub fn graph_homophily(&self) -> Result<f64> {
        let mut sum = 0.0;
        let mut count = 0usize;
        for i in 0..self.num_nodes {
            if self.degree(i) > 0 {
                sum += self.node_homophily(i)?;
                count += 1;
            }
        }
        if count == 0 {
            return Err(Error::AllIsolated);
        }
        Ok(sum / count as f64)
    }

    /// Fraction of the k-hop neighborhood sharing `node`'s label.
    pub fn khop_homophily(&self, node: usize, k: usize) -> Result<f64> {
        let hood = self.khop_neighborhood(node, k)?;
        if hood.members.is_empty() {
            return Err(Error::UndefinedHomophily(node));
        }
        let same = hood
            .members
            .iter()
            .filter(|&&j| self.labels[j] == self.labels[node])
            .count();
        Ok(same as f64 / hood.members.len() as f64)
    }

    pub fn node_heterophily(&self, node: usize) -> Result<f64> {
        Ok(1.0 - self.node_homophily(node)?)
    }

    pub fn graph_heterophily(&self) -> Result<f64> {
        Ok(1.0 - self.graph_homophily()?)
    }
}
