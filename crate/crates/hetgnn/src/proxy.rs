//! Proxy label predictors. A cheap model is trained on the same splits,
//! and its softmax outputs become the pseudo-label distributions feeding
//! the homophily mask.

use crate::error::Result;
use crate::gnn::{self, Arch, History, ModelSpec, TrainOptions, TrainedModel};
use crate::graph::Graph;
use crate::mask::PseudoLabels;
use crate::nn::softmax;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProxyKind {
    /// 3-layer MLP, hidden 64, dropout 0.5 (default).
    Mlp3,
    /// 4-layer GCN, hidden 64, dropout 0.5.
    Gcn4,
    /// SGC with 3 propagation hops.
    Sgc3,
}

impl Default for ProxyKind {
    fn default() -> Self {
        ProxyKind::Mlp3
    }
}

impl ProxyKind {
    pub fn model_spec(self) -> ModelSpec {
        match self {
            ProxyKind::Mlp3 => ModelSpec {
                arch: Arch::Mlp,
                layers: 3,
                hidden_dim: 64,
                dropout: 0.5,
            },
            ProxyKind::Gcn4 => ModelSpec {
                arch: Arch::Gcn,
                layers: 4,
                hidden_dim: 64,
                dropout: 0.5,
            },
            ProxyKind::Sgc3 => ModelSpec {
                arch: Arch::Sgc,
                layers: 3,
                hidden_dim: 64,
                dropout: 0.0,
            },
        }
    }
}

impl std::str::FromStr for ProxyKind {
    type Err = crate::error::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mlp3" => Ok(ProxyKind::Mlp3),
            "gcn4" => Ok(ProxyKind::Gcn4),
            "sgc3" => Ok(ProxyKind::Sgc3),
            other => Err(crate::error::Error::InvalidArgument(format!(
                "unknown proxy '{other}' (expected mlp3, gcn4, or sgc3)"
            ))),
        }
    }
}

pub struct ProxyOutput {
    pub model: TrainedModel,
    pub history: History,
    pub pseudo_labels: PseudoLabels,
}

/// Softmax rows of the best-validation proxy become the pseudo-labels.
pub fn pseudo_labels_from_model(model: &TrainedModel, graph: &Graph) -> Result<PseudoLabels> {
    let logits = gnn::forward(model, graph, None)?;
    PseudoLabels::new(softmax(&logits))
}

pub fn train_proxy(graph: &Graph, kind: ProxyKind, seed: u64) -> Result<ProxyOutput> {
    let (model, history) = gnn::train(
        graph,
        kind.model_spec(),
        None,
        TrainOptions::default(),
        seed,
    )?;
    let pseudo_labels = pseudo_labels_from_model(&model, graph)?;
    Ok(ProxyOutput {
        model,
        history,
        pseudo_labels,
    })
}

/// Mask co-optimization. Disabled period = two-phase training: the proxy
/// is trained fully, the mask frozen, and the downstream GNN trained
/// against it. With a period, the proxy is fine-tuned and the mask
/// rebuilt every `period` downstream epochs.
pub struct RefreshCycle<'g> {
    proxy: crate::gnn::Trainer<'g>,
    pub mask: HomophilyMask,
    period: Option<usize>,
    fine_tune_epochs: usize,
}

use crate::mask::{build_mask, HomophilyMask};

impl<'g> RefreshCycle<'g> {
    pub fn new(
        graph: &'g Graph,
        kind: ProxyKind,
        opts: TrainOptions,
        period: Option<usize>,
        fine_tune_epochs: usize,
        seed: u64,
    ) -> Result<Self> {
        if period == Some(0) {
            return Err(crate::error::Error::InvalidArgument(
                "refresh period must be >= 1".into(),
            ));
        }
        let mut proxy = crate::gnn::Trainer::new(graph, kind.model_spec(), None, opts, seed)?;
        proxy.run_to_completion()?;
        proxy.restore_best();
        let pseudo = pseudo_labels_from_model(&proxy.network.to_model(), graph)?;
        let mask = build_mask(graph, &pseudo)?;
        Ok(RefreshCycle {
            proxy,
            mask,
            period,
            fine_tune_epochs,
        })
    }

    /// Call once per downstream GNN epoch; returns true when the mask was
    /// rebuilt this epoch.
    pub fn on_epoch(&mut self, graph: &Graph, gnn_epoch: usize) -> Result<bool> {
        let Some(p) = self.period else {
            return Ok(false);
        };
        if gnn_epoch == 0 || gnn_epoch % p != 0 {
            return Ok(false);
        }
        for _ in 0..self.fine_tune_epochs {
            self.proxy.run_epoch()?;
        }
        let pseudo = pseudo_labels_from_model(&self.proxy.network.to_model(), graph)?;
        self.mask = build_mask(graph, &pseudo)?;
        Ok(true)
    }
}
