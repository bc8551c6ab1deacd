//! Per-node receptive-field assignment (the early-stopping core).

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::scores::HopScores;
use serde::{Deserialize, Serialize};

/// Stopping rule for turning hop scores into stop depths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum StopRule {
    /// Stop once the hop score decays below fraction rho of the 1-hop
    /// score; the receptive field is the longest prefix of hops where
    /// score_k >= rho * score_1.
    #[default]
    ContiguousRatio,
    /// The comparison direction exactly as printed in the source
    /// algorithm (aggregate while score_k <= rho * score_1); kept for
    /// auditability.
    LiteralAlg1,
}

/// The rho search grid used by sweep selection.
pub const RHO_GRID: [f64; 5] = [1e-2, 1e-4, 1e-6, 1e-8, 1e-16];

/// Per-node stop depth R_i in [1, L].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReceptiveFieldPlan {
    pub stop_depth: Vec<usize>,
    pub layers: usize,
    pub rule: String,
    /// Nodes whose 1-hop score was zero; their depth defaults to 1.
    pub degenerate_nodes: Vec<usize>,
}

impl ReceptiveFieldPlan {
    /// All nodes aggregate at every layer; equivalent to no plan.
    pub fn full(num_nodes: usize, layers: usize) -> Self {
        ReceptiveFieldPlan {
            stop_depth: vec![layers; num_nodes],
            layers,
            rule: "full".into(),
            degenerate_nodes: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (i, &r) in self.stop_depth.iter().enumerate() {
            if r < 1 || r > self.layers {
                return Err(Error::InvalidArgument(format!(
                    "stop depth {r} of node {i} outside [1, {}]",
                    self.layers
                )));
            }
        }
        Ok(())
    }

    /// Histogram of stop depths, index k-1 counts nodes with R_i = k.
    pub fn depth_histogram(&self) -> Vec<usize> {
        let mut h = vec![0usize; self.layers];
        for &r in &self.stop_depth {
            h[r - 1] += 1;
        }
        h
    }

    pub fn fraction_stopped_early(&self) -> f64 {
        if self.stop_depth.is_empty() {
            return 0.0;
        }
        self.stop_depth.iter().filter(|&&r| r < self.layers).count() as f64
            / self.stop_depth.len() as f64
    }

    /// JSON export: array of {node, stop_depth}.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Entry {
            node: usize,
            stop_depth: usize,
        }
        let entries: Vec<Entry> = self
            .stop_depth
            .iter()
            .enumerate()
            .map(|(node, &stop_depth)| Entry { node, stop_depth })
            .collect();
        serde_json::to_string_pretty(&entries).expect("plan serializes")
    }
}

/// Assign stop depths from hop scores.
pub fn assign_receptive_fields(
    scores: &HopScores,
    rho: f64,
    layers: usize,
    rule: StopRule,
) -> Result<ReceptiveFieldPlan> {
    if rho < 0.0 {
        return Err(Error::InvalidArgument(format!("rho {rho} must be >= 0")));
    }
    if layers < 1 || layers > scores.num_hops() {
        return Err(Error::InvalidArgument(format!(
            "layer count {layers} outside [1, {}]",
            scores.num_hops()
        )));
    }
    let n = scores.scores.rows;
    let mut stop_depth = vec![1usize; n];
    let mut degenerate = Vec::new();
    for i in 0..n {
        let row = scores.scores.row(i);
        let base = row[0];
        if base <= 0.0 {
            degenerate.push(i);
            continue;
        }
        let keep = |k: usize| -> bool {
            match rule {
                StopRule::ContiguousRatio => row[k - 1] >= rho * base,
                StopRule::LiteralAlg1 => row[k - 1] <= rho * base,
            }
        };
        let mut depth = match rule {
            StopRule::ContiguousRatio => 1, // k=1 always holds
            StopRule::LiteralAlg1 => 0,
        };
        for k in (depth + 1)..=layers {
            if keep(k) {
                depth = k;
            } else {
                break;
            }
        }
        stop_depth[i] = depth.max(1);
    }
    let plan = ReceptiveFieldPlan {
        stop_depth,
        layers,
        rule: format!("{rule:?} rho={rho}"),
        degenerate_nodes: degenerate,
    };
    plan.validate()?;
    Ok(plan)
}

/// Label-oracle plan: the longest contiguous prefix of hops whose
/// true-label k-hop homophily stays at or above epsilon. `literal`
/// flips the comparison to the printed (<=) direction.
pub fn oracle_receptive_fields(
    graph: &Graph,
    epsilon: f64,
    layers: usize,
    literal: bool,
) -> Result<ReceptiveFieldPlan> {
    if layers < 1 {
        return Err(Error::InvalidArgument("layer count must be >= 1".into()));
    }
    let n = graph.num_nodes;
    let mut stop_depth = vec![1usize; n];
    let mut degenerate = Vec::new();
    for i in 0..n {
        if graph.degree(i) == 0 {
            degenerate.push(i);
            continue;
        }
        let mut depth = 1usize;
        for k in 1..=layers {
            let h = match graph.khop_homophily(i, k) {
                Ok(h) => h,
                Err(_) => break,
            };
            let keep = if literal { h <= epsilon } else { h >= epsilon };
            if keep {
                depth = k;
            } else {
                break;
            }
        }
        stop_depth[i] = depth;
    }
    Ok(ReceptiveFieldPlan {
        stop_depth,
        layers,
        rule: format!(
            "oracle epsilon={epsilon} direction={}",
            if literal { "literal" } else { "narrative" }
        ),
        degenerate_nodes: degenerate,
    })
}

/// Per-layer aggregation gates: mask[l-1][i] is true iff node i still
/// aggregates at layer l.
pub fn layer_aggregation_masks(plan: &ReceptiveFieldPlan, layers: usize) -> Vec<Vec<bool>> {
    (1..=layers)
        .map(|l| plan.stop_depth.iter().map(|&r| l <= r).collect())
        .collect()
}
