//! Multiply-accumulate and aggregation-sparsity accounting.
//!
//! Aggregation cost at layer l counts one MAC per active incoming edge
//! per input feature. A directed edge into node i is active iff i is
//! still aggregating at layer l; every node always has one self-loop
//! slot (either the normalized self-loop or the identity passthrough).

use crate::error::Result;
use crate::gnn::{Arch, ModelSpec};
use crate::graph::Graph;
use crate::plan::{layer_aggregation_masks, ReceptiveFieldPlan};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayerMacs {
    pub layer: usize,
    pub aggregation: u64,
    pub transform: u64,
    pub nnz_active: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MacsReport {
    pub layers: Vec<LayerMacs>,
    pub total_aggregation: u64,
    pub total_transform: u64,
    pub total: u64,
    /// Percentage of aggregation slots skipped relative to a full plan.
    pub aggregation_sparsity_pct: f64,
}

/// Active slot count at one layer: directed edges into still-aggregating
/// nodes, plus one self slot per node.
fn nnz_active(graph: &Graph, active: Option<&[bool]>) -> u64 {
    let base = graph.num_nodes as u64;
    match active {
        None => base + graph.num_directed_edges() as u64,
        Some(active) => {
            let mut edges = 0u64;
            for (i, &a) in active.iter().enumerate() {
                if a {
                    edges += graph.degree(i) as u64;
                }
            }
            base + edges
        }
    }
}

pub fn count_macs(
    graph: &Graph,
    spec: &ModelSpec,
    plan: Option<&ReceptiveFieldPlan>,
) -> Result<MacsReport> {
    spec.validate()?;
    let n = graph.num_nodes as u64;
    let dims = spec.dims(graph.features.cols, graph.num_classes);
    let masks = plan.map(|p| layer_aggregation_masks(p, spec.layers));
    let nnz_full = n + graph.num_directed_edges() as u64;

    let mut layers = Vec::new();
    let mut total_nnz_active = 0u64;
    let mut total_nnz_full = 0u64;
    match spec.arch {
        Arch::Mlp => {
            for (l, w) in dims.windows(2).enumerate() {
                layers.push(LayerMacs {
                    layer: l + 1,
                    aggregation: 0,
                    transform: n * w[0] as u64 * w[1] as u64,
                    nnz_active: 0,
                });
            }
        }
        Arch::Gcn => {
            for (l, w) in dims.windows(2).enumerate() {
                let active = masks.as_ref().map(|m| m[l].as_slice());
                let nz = nnz_active(graph, active);
                total_nnz_active += nz;
                total_nnz_full += nnz_full;
                layers.push(LayerMacs {
                    layer: l + 1,
                    aggregation: nz * w[0] as u64,
                    transform: n * w[0] as u64 * w[1] as u64,
                    nnz_active: nz,
                });
            }
        }
        Arch::Sgc => {
            let d = graph.features.cols as u64;
            for l in 0..spec.layers {
                let active = masks.as_ref().map(|m| m[l].as_slice());
                let nz = nnz_active(graph, active);
                total_nnz_active += nz;
                total_nnz_full += nnz_full;
                layers.push(LayerMacs {
                    layer: l + 1,
                    aggregation: nz * d,
                    transform: 0,
                    nnz_active: nz,
                });
            }
            layers.push(LayerMacs {
                layer: spec.layers + 1,
                aggregation: 0,
                transform: n * d * graph.num_classes as u64,
                nnz_active: 0,
            });
        }
    }

    let total_aggregation: u64 = layers.iter().map(|l| l.aggregation).sum();
    let total_transform: u64 = layers.iter().map(|l| l.transform).sum();
    let sparsity = if total_nnz_full == 0 {
        0.0
    } else {
        100.0 * (1.0 - total_nnz_active as f64 / total_nnz_full as f64)
    };
    Ok(MacsReport {
        layers,
        total_aggregation,
        total_transform,
        total: total_aggregation + total_transform,
        aggregation_sparsity_pct: sparsity,
    })
}
