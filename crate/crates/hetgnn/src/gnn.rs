//! GCN, SGC and MLP with per-node receptive-field masking, plus the full
//! training loop with best-validation snapshotting.

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::matrix::{DenseMatrix, SparseMatrix};
use crate::nn::{
    dropout_backward, dropout_forward, relu_backward, relu_forward, softmax_cross_entropy,
    AdamConfig, AdamState, Linear,
};
use crate::plan::{layer_aggregation_masks, ReceptiveFieldPlan};
use crate::propagation::{normalized_adjacency, NormMode};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arch {
    Mlp,
    Gcn,
    Sgc,
}

/// Architecture descriptor. For SGC `layers` is the propagation hop
/// count; the transform is a single linear map.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ModelSpec {
    pub arch: Arch,
    pub layers: usize,
    pub hidden_dim: usize,
    pub dropout: f64,
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        if self.layers < 1 {
            return Err(Error::InvalidArgument("layers must be >= 1".into()));
        }
        if self.hidden_dim == 0 {
            return Err(Error::InvalidArgument("hidden_dim must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::InvalidArgument(format!(
                "dropout {} outside [0, 1)",
                self.dropout
            )));
        }
        Ok(())
    }

    /// Weight-shape chain from input dim to class count.
    pub fn dims(&self, in_dim: usize, num_classes: usize) -> Vec<usize> {
        match self.arch {
            Arch::Sgc => vec![in_dim, num_classes],
            Arch::Mlp | Arch::Gcn => {
                let mut d = vec![in_dim];
                for _ in 1..self.layers {
                    d.push(self.hidden_dim);
                }
                d.push(num_classes);
                d
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub spec: ModelSpec,
    pub layers: Vec<Linear>,
}

/// Per-epoch record; accuracies are computed with dropout disabled.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub train_acc: f64,
    pub val_acc: f64,
    pub test_acc: f64,
}

pub type History = Vec<EpochStats>;

#[derive(Debug, Clone, Copy)]
pub struct TrainOptions {
    pub max_epochs: usize,
    pub patience: usize,
    pub adam: AdamConfig,
    /// L2 penalty applied to the first layer's weight only.
    pub weight_decay: f64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            max_epochs: 500,
            patience: 100,
            adam: AdamConfig::default(),
            weight_decay: 5e-4,
        }
    }
}

/// Row-masked aggregation: rows still aggregating get (ahat * h)_i, the
/// others pass their own embedding through unchanged.
fn masked_agg(
    ahat: &SparseMatrix,
    h: &DenseMatrix,
    active: Option<&[bool]>,
) -> Result<DenseMatrix> {
    let mut out = ahat.spmm(h)?;
    if let Some(active) = active {
        for (i, &a) in active.iter().enumerate() {
            if !a {
                out.row_mut(i).copy_from_slice(h.row(i));
            }
        }
    }
    Ok(out)
}

/// Adjoint of `masked_agg` for a symmetric ahat:
/// (R ahat + (I - R))^T g = ahat (R g) + (I - R) g.
fn masked_agg_transpose(
    ahat: &SparseMatrix,
    grad: &DenseMatrix,
    active: Option<&[bool]>,
) -> Result<DenseMatrix> {
    match active {
        None => ahat.spmm(grad),
        Some(active) => {
            let mut gated = grad.clone();
            for (i, &a) in active.iter().enumerate() {
                if !a {
                    gated.row_mut(i).fill(0.0);
                }
            }
            let mut out = ahat.spmm(&gated)?;
            for (i, &a) in active.iter().enumerate() {
                if !a {
                    for (o, &g) in out.row_mut(i).iter_mut().zip(grad.row(i)) {
                        *o += g;
                    }
                }
            }
            Ok(out)
        }
    }
}

pub struct LayerCache {
    dropout_mask: Option<Vec<f64>>,
    /// Input to the linear map (post-aggregation for GCN).
    linear_in: DenseMatrix,
    /// Pre-activation output.
    pre_act: DenseMatrix,
}

pub struct ForwardCache {
    layers: Vec<LayerCache>,
    /// SGC only: the propagated features feeding the linear map.
    sgc_in: Option<DenseMatrix>,
    sgc_dropout_mask: Option<Vec<f64>>,
}

/// Model + graph-bound state for training and inference.
pub struct Network {
    pub spec: ModelSpec,
    pub layers: Vec<Linear>,
    ahat: SparseMatrix,
    layer_masks: Option<Vec<Vec<bool>>>,
}

impl Network {
    pub fn new(
        graph: &Graph,
        spec: ModelSpec,
        plan: Option<&ReceptiveFieldPlan>,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        spec.validate()?;
        if let Some(p) = plan {
            p.validate()?;
            if p.stop_depth.len() != graph.num_nodes {
                return Err(Error::ShapeMismatch(format!(
                    "plan covers {} nodes, graph has {}",
                    p.stop_depth.len(),
                    graph.num_nodes
                )));
            }
        }
        let dims = spec.dims(graph.features.cols, graph.num_classes);
        let layers: Vec<Linear> = dims
            .windows(2)
            .map(|w| Linear::glorot(w[0], w[1], rng))
            .collect();
        let ahat = normalized_adjacency(graph, NormMode::Symmetric, true)?;
        Ok(Network {
            spec,
            layers,
            ahat,
            layer_masks: plan.map(|p| layer_aggregation_masks(p, spec.layers)),
        })
    }

    pub fn from_model(graph: &Graph, model: &TrainedModel, plan: Option<&ReceptiveFieldPlan>) -> Result<Self> {
        let ahat = normalized_adjacency(graph, NormMode::Symmetric, true)?;
        Ok(Network {
            spec: model.spec,
            layers: model.layers.clone(),
            ahat,
            layer_masks: plan.map(|p| layer_aggregation_masks(p, model.spec.layers)),
        })
    }

    pub fn set_plan(&mut self, plan: Option<&ReceptiveFieldPlan>) {
        self.layer_masks = plan.map(|p| layer_aggregation_masks(p, self.spec.layers));
    }

    fn mask_at(&self, layer: usize) -> Option<&[bool]> {
        self.layer_masks.as_ref().map(|m| m[layer].as_slice())
    }

    /// SGC feature propagation through `layers` masked hops.
    fn sgc_propagate(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        let mut h = x.clone();
        for l in 0..self.spec.layers {
            h = masked_agg(&self.ahat, &h, self.mask_at(l))?;
        }
        Ok(h)
    }

    fn forward_inner(
        &self,
        x: &DenseMatrix,
        mut rng: Option<&mut ChaCha8Rng>,
    ) -> Result<(DenseMatrix, ForwardCache)> {
        let mut cache = ForwardCache {
            layers: Vec::new(),
            sgc_in: None,
            sgc_dropout_mask: None,
        };
        let p = self.spec.dropout;
        match self.spec.arch {
            Arch::Sgc => {
                let propagated = self.sgc_propagate(x)?;
                let (input, mask) = match rng.as_deref_mut() {
                    Some(rng) if p > 0.0 => {
                        let (d, m) = dropout_forward(&propagated, p, rng);
                        (d, Some(m))
                    }
                    _ => (propagated, None),
                };
                let logits = self.layers[0].forward(&input)?;
                cache.sgc_in = Some(input);
                cache.sgc_dropout_mask = mask;
                Ok((logits, cache))
            }
            Arch::Mlp | Arch::Gcn => {
                let nlayers = self.layers.len();
                let mut h = x.clone();
                for (l, layer) in self.layers.iter().enumerate() {
                    let (dropped, dmask) = match rng.as_deref_mut() {
                        Some(rng) if p > 0.0 => {
                            let (d, m) = dropout_forward(&h, p, rng);
                            (d, Some(m))
                        }
                        _ => (h.clone(), None),
                    };
                    let linear_in = if self.spec.arch == Arch::Gcn {
                        masked_agg(&self.ahat, &dropped, self.mask_at(l))?
                    } else {
                        dropped
                    };
                    let pre_act = layer.forward(&linear_in)?;
                    h = if l + 1 < nlayers {
                        relu_forward(&pre_act)
                    } else {
                        pre_act.clone()
                    };
                    cache.layers.push(LayerCache {
                        dropout_mask: dmask,
                        linear_in,
                        pre_act,
                    });
                }
                Ok((h, cache))
            }
        }
    }

    pub fn forward_eval(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        Ok(self.forward_inner(x, None)?.0)
    }

    pub fn forward_train(
        &self,
        x: &DenseMatrix,
        rng: &mut ChaCha8Rng,
    ) -> Result<(DenseMatrix, ForwardCache)> {
        self.forward_inner(x, Some(rng))
    }

    /// Backward pass; returns per-layer (grad_weight, grad_bias).
    pub fn backward(
        &self,
        cache: &ForwardCache,
        grad_logits: &DenseMatrix,
    ) -> Result<Vec<(DenseMatrix, Vec<f64>)>> {
        match self.spec.arch {
            Arch::Sgc => {
                let input = cache.sgc_in.as_ref().expect("sgc cache");
                let (_, gw, gb) = self.layers[0].backward(input, grad_logits)?;
                Ok(vec![(gw, gb)])
            }
            Arch::Mlp | Arch::Gcn => {
                let nlayers = self.layers.len();
                let mut grads = vec![None; nlayers];
                let mut g = grad_logits.clone();
                for l in (0..nlayers).rev() {
                    let lc = &cache.layers[l];
                    if l + 1 < nlayers {
                        g = relu_backward(&lc.pre_act, &g);
                    }
                    let (g_in, gw, gb) = self.layers[l].backward(&lc.linear_in, &g)?;
                    grads[l] = Some((gw, gb));
                    if l == 0 {
                        break;
                    }
                    let mut g_prev = if self.spec.arch == Arch::Gcn {
                        masked_agg_transpose(&self.ahat, &g_in, self.mask_at(l))?
                    } else {
                        g_in
                    };
                    if let Some(mask) = &lc.dropout_mask {
                        g_prev = dropout_backward(&g_prev, mask);
                    }
                    g = g_prev;
                }
                Ok(grads.into_iter().map(|g| g.expect("grad set")).collect())
            }
        }
    }

    pub fn to_model(&self) -> TrainedModel {
        TrainedModel {
            spec: self.spec,
            layers: self.layers.clone(),
        }
    }
}

/// Argmax accuracy on a split; ties broken by the lowest class index.
pub fn accuracy(logits: &DenseMatrix, labels: &[usize], split: &[usize]) -> Result<f64> {
    if split.is_empty() {
        return Err(Error::EmptySplit("accuracy split".into()));
    }
    let mut correct = 0usize;
    for &i in split {
        let row = logits.row(i);
        let mut best = 0usize;
        for (c, &v) in row.iter().enumerate() {
            if v > row[best] {
                best = c;
            }
        }
        if best == labels[i] {
            correct += 1;
        }
    }
    Ok(correct as f64 / split.len() as f64)
}

/// Incremental trainer; exposed so callers can interleave epochs with
/// mask refreshes.
pub struct Trainer<'g> {
    pub network: Network,
    graph: &'g Graph,
    opts: TrainOptions,
    adam: AdamState,
    rng: ChaCha8Rng,
    pub epoch: usize,
    best_val_loss: f64,
    best_layers: Vec<Linear>,
    epochs_since_best: usize,
    pub history: History,
}

impl<'g> Trainer<'g> {
    pub fn new(
        graph: &'g Graph,
        spec: ModelSpec,
        plan: Option<&ReceptiveFieldPlan>,
        opts: TrainOptions,
        seed: u64,
    ) -> Result<Self> {
        if graph.splits.train.is_empty() {
            return Err(Error::EmptySplit("training split".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let network = Network::new(graph, spec, plan, &mut rng)?;
        let shapes: Vec<usize> = network
            .layers
            .iter()
            .flat_map(|l| [l.weight.data.len(), l.bias.len()])
            .collect();
        let adam = AdamState::new(opts.adam, &shapes);
        let best_layers = network.layers.clone();
        Ok(Trainer {
            network,
            graph,
            opts,
            adam,
            rng,
            epoch: 0,
            best_val_loss: f64::INFINITY,
            best_layers,
            epochs_since_best: 0,
            history: Vec::new(),
        })
    }

    pub fn set_plan(&mut self, plan: Option<&ReceptiveFieldPlan>) {
        self.network.set_plan(plan);
    }

    /// One full-batch epoch: forward with dropout, CE on the training
    /// split, Adam update, then an evaluation pass for the history row.
    pub fn run_epoch(&mut self) -> Result<&EpochStats> {
        let g = self.graph;
        let (logits, cache) = self.network.forward_train(&g.features, &mut self.rng)?;
        let (train_loss, grad_logits) =
            softmax_cross_entropy(&logits, &g.labels, &g.splits.train)?;
        if !train_loss.is_finite() {
            return Err(Error::Diverged(format!(
                "training loss {train_loss} at epoch {}",
                self.epoch
            )));
        }
        let mut grads = self.network.backward(&cache, &grad_logits)?;
        if self.opts.weight_decay > 0.0 {
            let (gw0, _) = &mut grads[0];
            for (g, &w) in gw0.data.iter_mut().zip(&self.network.layers[0].weight.data) {
                *g += self.opts.weight_decay * w;
            }
        }
        self.adam.begin_step();
        for (l, (gw, gb)) in grads.iter().enumerate() {
            let layer = &mut self.network.layers[l];
            self.adam.update(2 * l, &mut layer.weight.data, &gw.data)?;
            self.adam.update(2 * l + 1, &mut layer.bias, gb)?;
        }

        let eval_logits = self.network.forward_eval(&g.features)?;
        let val_split: &[usize] = if g.splits.val.is_empty() {
            &g.splits.train
        } else {
            &g.splits.val
        };
        let (val_loss, _) = softmax_cross_entropy(&eval_logits, &g.labels, val_split)?;
        let stats = EpochStats {
            epoch: self.epoch,
            train_loss,
            val_loss,
            train_acc: accuracy(&eval_logits, &g.labels, &g.splits.train)?,
            val_acc: accuracy(&eval_logits, &g.labels, val_split)?,
            test_acc: if g.splits.test.is_empty() {
                0.0
            } else {
                accuracy(&eval_logits, &g.labels, &g.splits.test)?
            },
        };
        if val_loss < self.best_val_loss {
            self.best_val_loss = val_loss;
            self.best_layers = self.network.layers.clone();
            self.epochs_since_best = 0;
        } else {
            self.epochs_since_best += 1;
        }
        self.epoch += 1;
        self.history.push(stats);
        Ok(self.history.last().unwrap())
    }

    pub fn patience_exhausted(&self) -> bool {
        self.epochs_since_best > self.opts.patience
    }

    /// Run until max_epochs or validation patience runs out.
    pub fn run_to_completion(&mut self) -> Result<()> {
        while self.epoch < self.opts.max_epochs && !self.patience_exhausted() {
            self.run_epoch()?;
        }
        Ok(())
    }

    /// Reset the live network to the best-validation snapshot.
    pub fn restore_best(&mut self) {
        self.network.layers = self.best_layers.clone();
    }

    /// Best-validation-loss snapshot.
    pub fn best_model(&self) -> TrainedModel {
        TrainedModel {
            spec: self.network.spec,
            layers: self.best_layers.clone(),
        }
    }
}

/// Train a model from scratch; returns the best-validation snapshot and
/// the per-epoch history.
pub fn train(
    graph: &Graph,
    spec: ModelSpec,
    plan: Option<&ReceptiveFieldPlan>,
    opts: TrainOptions,
    seed: u64,
) -> Result<(TrainedModel, History)> {
    let mut trainer = Trainer::new(graph, spec, plan, opts, seed)?;
    trainer.run_to_completion()?;
    let history = trainer.history.clone();
    Ok((trainer.best_model(), history))
}

/// Forward pass of a trained model; plan=None means every node aggregates
/// at every layer.
pub fn forward(
    model: &TrainedModel,
    graph: &Graph,
    plan: Option<&ReceptiveFieldPlan>,
) -> Result<DenseMatrix> {
    let network = Network::from_model(graph, model, plan)?;
    network.forward_eval(&graph.features)
}

/// Accuracy of a trained model on the given split.
pub fn evaluate(
    model: &TrainedModel,
    graph: &Graph,
    plan: Option<&ReceptiveFieldPlan>,
    split: &[usize],
) -> Result<f64> {
    let logits = forward(model, graph, plan)?;
    accuracy(&logits, &graph.labels, split)
}
