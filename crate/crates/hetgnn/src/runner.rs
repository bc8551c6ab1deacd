//! Experiment orchestration: config parsing, seeded runs, the rho sweep,
//! and self-describing output directories.

use crate::bundle::load_bundle;
use crate::error::{Error, Result};
use crate::gnn::{self, Arch, History, ModelSpec, TrainOptions};
use crate::graph::Graph;
use crate::macs::{count_macs, MacsReport};
use crate::mask::build_mask;
use crate::plan::{
    assign_receptive_fields, oracle_receptive_fields, ReceptiveFieldPlan, StopRule,
};
use crate::proxy::{train_proxy, ProxyKind};
use crate::sbm::{generate_sbm, make_splits, SbmSpec};
use crate::scores::{hop_scores, DEFAULT_EXACT_THRESHOLD};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SbmDatasetConfig {
    pub clusters: usize,
    pub cluster_size: usize,
    pub p: f64,
    pub q: f64,
    pub seed: u64,
    #[serde(default)]
    pub split_seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct DatasetConfig {
    /// Bundle directory on disk; mutually exclusive with `sbm`.
    pub path: Option<PathBuf>,
    pub sbm: Option<SbmDatasetConfig>,
}

fn default_hidden() -> usize {
    64
}
fn default_dropout() -> f64 {
    0.5
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelConfig {
    pub arch: Arch,
    pub layers: usize,
    #[serde(default = "default_hidden")]
    pub hidden_dim: usize,
    #[serde(default = "default_dropout")]
    pub dropout: f64,
}

impl ModelConfig {
    pub fn spec(&self) -> ModelSpec {
        ModelSpec {
            arch: self.arch,
            layers: self.layers,
            hidden_dim: self.hidden_dim,
            dropout: self.dropout,
        }
    }
}

fn default_rho() -> f64 {
    1e-4
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HesConfig {
    #[serde(default = "default_rho")]
    pub rho: f64,
    /// Grid for `sweep-rho`; ignored by plain runs.
    pub grid: Option<Vec<f64>>,
    #[serde(default)]
    pub rule: StopRule,
    #[serde(default)]
    pub proxy: ProxyKind,
    /// Build the plan from true labels instead of the proxy (motivation
    /// experiments): stop at the deepest hop whose true-label homophily
    /// stays at or above this threshold.
    pub oracle_epsilon: Option<f64>,
    /// Fine-tune the proxy and rebuild the mask every this many GNN
    /// epochs; absent = two-phase training with a frozen mask.
    pub refresh_period: Option<usize>,
}

impl Default for HesConfig {
    fn default() -> Self {
        HesConfig {
            rho: default_rho(),
            grid: None,
            rule: StopRule::default(),
            proxy: ProxyKind::default(),
            oracle_epsilon: None,
            refresh_period: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub strict: bool,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: DatasetConfig,
    pub model: ModelConfig,
    #[serde(default)]
    pub hes: HesConfig,
    pub run: RunConfig,
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(s)
            .map_err(|e| Error::InvalidArgument(format!("config parse error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::from_toml_str(&s)
    }

    pub fn validate(&self) -> Result<()> {
        match (&self.dataset.path, &self.dataset.sbm) {
            (Some(_), Some(_)) => {
                return Err(Error::InvalidArgument(
                    "dataset.path and dataset.sbm are mutually exclusive".into(),
                ))
            }
            (None, None) => {
                return Err(Error::InvalidArgument(
                    "config needs dataset.path or dataset.sbm".into(),
                ))
            }
            (Some(p), None) => {
                if !p.is_dir() {
                    return Err(Error::InvalidArgument(format!(
                        "dataset path {} is not a directory",
                        p.display()
                    )));
                }
            }
            (None, Some(_)) => {}
        }
        if self.run.seeds.is_empty() {
            return Err(Error::InvalidArgument("seeds list is empty".into()));
        }
        self.model.spec().validate()?;
        if let Some(grid) = &self.hes.grid {
            if grid.is_empty() {
                return Err(Error::InvalidArgument("rho grid is empty".into()));
            }
        }
        Ok(())
    }

    pub fn load_graph(&self) -> Result<Graph> {
        match (&self.dataset.path, &self.dataset.sbm) {
            (Some(p), None) => load_bundle(p),
            (None, Some(s)) => {
                let spec = SbmSpec {
                    clusters: s.clusters,
                    cluster_size: s.cluster_size,
                    p: s.p,
                    q: s.q,
                    seed: s.seed,
                    allow_q_above_p: true,
                };
                let mut g = generate_sbm(&spec)?;
                g.splits = make_splits(&g, (0.48, 0.32, 0.20), s.split_seed)?;
                Ok(g)
            }
            _ => unreachable!("validated"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanSummary {
    pub depth_histogram: Vec<usize>,
    pub fraction_stopped_early: f64,
    pub degenerate_nodes: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedReport {
    pub seed: u64,
    pub baseline_test_acc: f64,
    pub hes_test_acc: f64,
    pub baseline_val_acc: f64,
    pub hes_val_acc: f64,
    pub baseline_val_curve: Vec<f64>,
    pub hes_val_curve: Vec<f64>,
    pub plan: PlanSummary,
    pub baseline_macs: MacsReport,
    pub hes_macs: MacsReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Aggregate {
    pub baseline_test_mean: f64,
    pub baseline_test_std: f64,
    pub hes_test_mean: f64,
    pub hes_test_std: f64,
    pub baseline_val_mean: f64,
    pub hes_val_mean: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AbortedSeed {
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub rho: f64,
    pub rule: StopRule,
    pub per_seed: Vec<SeedReport>,
    pub aborted: Vec<AbortedSeed>,
    pub aggregate: Option<Aggregate>,
    /// Omitted in strict mode so repeated runs are byte-identical.
    pub elapsed_seconds: Option<f64>,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let std = if xs.len() < 2 {
        0.0
    } else {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    (mean, std)
}

fn aggregate(per_seed: &[SeedReport]) -> Option<Aggregate> {
    if per_seed.is_empty() {
        return None;
    }
    let col = |f: fn(&SeedReport) -> f64| per_seed.iter().map(f).collect::<Vec<_>>();
    let (btm, bts) = mean_std(&col(|s| s.baseline_test_acc));
    let (htm, hts) = mean_std(&col(|s| s.hes_test_acc));
    let (bvm, _) = mean_std(&col(|s| s.baseline_val_acc));
    let (hvm, _) = mean_std(&col(|s| s.hes_val_acc));
    Some(Aggregate {
        baseline_test_mean: btm,
        baseline_test_std: bts,
        hes_test_mean: htm,
        hes_test_std: hts,
        baseline_val_mean: bvm,
        hes_val_mean: hvm,
    })
}

fn derive_seed(seed: u64, salt: u64) -> u64 {
    // splitmix-style decorrelation of the per-stage streams
    let mut z = seed
        .wrapping_add(salt.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn plan_from_mask(
    graph: &Graph,
    mask: &crate::mask::HomophilyMask,
    rho: f64,
    layers: usize,
    rule: StopRule,
) -> Result<ReceptiveFieldPlan> {
    let scores = hop_scores(mask, graph, layers, DEFAULT_EXACT_THRESHOLD)?;
    assign_receptive_fields(&scores, rho, layers, rule)
}

/// Build the per-node plan for one seed (proxy route or oracle route).
pub fn build_plan(
    graph: &Graph,
    cfg: &ExperimentConfig,
    rho: f64,
    seed: u64,
) -> Result<ReceptiveFieldPlan> {
    let layers = cfg.model.layers;
    if let Some(eps) = cfg.hes.oracle_epsilon {
        let literal = cfg.hes.rule == StopRule::LiteralAlg1;
        return oracle_receptive_fields(graph, eps, layers, literal);
    }
    let proxy = train_proxy(graph, cfg.hes.proxy, derive_seed(seed, 1))?;
    let mask = build_mask(graph, &proxy.pseudo_labels)?;
    plan_from_mask(graph, &mask, rho, layers, cfg.hes.rule)
}

/// Mask-refresh training path: the plan is rebuilt from the refreshed
/// mask whenever the cycle fires; the final plan is reported.
fn train_hes_with_refresh(
    graph: &Graph,
    cfg: &ExperimentConfig,
    rho: f64,
    period: usize,
    seed: u64,
) -> Result<(gnn::TrainedModel, History, ReceptiveFieldPlan)> {
    let spec = cfg.model.spec();
    let opts = TrainOptions::default();
    let mut refresh = crate::proxy::RefreshCycle::new(
        graph,
        cfg.hes.proxy,
        opts,
        Some(period),
        1,
        derive_seed(seed, 1),
    )?;
    let mut plan = plan_from_mask(graph, &refresh.mask, rho, cfg.model.layers, cfg.hes.rule)?;
    let mut trainer = gnn::Trainer::new(graph, spec, Some(&plan), opts, seed)?;
    while trainer.epoch < opts.max_epochs && !trainer.patience_exhausted() {
        if refresh.on_epoch(graph, trainer.epoch)? {
            plan = plan_from_mask(graph, &refresh.mask, rho, cfg.model.layers, cfg.hes.rule)?;
            trainer.set_plan(Some(&plan));
        }
        trainer.run_epoch()?;
    }
    let history = trainer.history.clone();
    Ok((trainer.best_model(), history, plan))
}

pub struct SeedArtifacts {
    pub report: SeedReport,
    pub plan: ReceptiveFieldPlan,
    pub baseline_history: History,
    pub hes_history: History,
}

fn val_curve(history: &History) -> Vec<f64> {
    history.iter().map(|e| e.val_acc).collect()
}

/// Validation-only model selection inputs. Constructing one is the
/// runner's information-flow gate: the test split is checked for
/// disjointness and never read.
#[derive(Debug, Clone, Copy)]
pub struct SelectionInputs {
    pub val_acc: f64,
}

impl SelectionInputs {
    pub fn from_history(graph: &Graph, history: &History) -> Result<Self> {
        for v in &graph.splits.val {
            if graph.splits.test.contains(v) {
                return Err(Error::InvalidArgument(format!(
                    "node {v} appears in both val and test splits"
                )));
            }
        }
        let best = history
            .iter()
            .map(|e| e.val_acc)
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(SelectionInputs { val_acc: best })
    }
}

fn run_seed(graph: &Graph, cfg: &ExperimentConfig, rho: f64, seed: u64) -> Result<SeedArtifacts> {
    let spec = cfg.model.spec();
    let opts = TrainOptions::default();
    let (baseline, baseline_history) = gnn::train(graph, spec, None, opts, seed)?;
    let (hes, hes_history, plan) = match cfg.hes.refresh_period {
        Some(period) if cfg.hes.oracle_epsilon.is_none() => {
            train_hes_with_refresh(graph, cfg, rho, period, seed)?
        }
        _ => {
            let plan = build_plan(graph, cfg, rho, seed)?;
            let (m, h) = gnn::train(graph, spec, Some(&plan), opts, seed)?;
            (m, h, plan)
        }
    };

    let baseline_test_acc = gnn::evaluate(&baseline, graph, None, &graph.splits.test)?;
    let hes_test_acc = gnn::evaluate(&hes, graph, Some(&plan), &graph.splits.test)?;
    let baseline_sel = SelectionInputs::from_history(graph, &baseline_history)?;
    let hes_sel = SelectionInputs::from_history(graph, &hes_history)?;

    let report = SeedReport {
        seed,
        baseline_test_acc,
        hes_test_acc,
        baseline_val_acc: baseline_sel.val_acc,
        hes_val_acc: hes_sel.val_acc,
        baseline_val_curve: val_curve(&baseline_history),
        hes_val_curve: val_curve(&hes_history),
        plan: PlanSummary {
            depth_histogram: plan.depth_histogram(),
            fraction_stopped_early: plan.fraction_stopped_early(),
            degenerate_nodes: plan.degenerate_nodes.len(),
        },
        baseline_macs: count_macs(graph, &spec, None)?,
        hes_macs: count_macs(graph, &spec, Some(&plan))?,
    };
    Ok(SeedArtifacts {
        report,
        plan,
        baseline_history,
        hes_history,
    })
}

pub struct RunOutput {
    pub report: RunReport,
    pub artifacts: Vec<SeedArtifacts>,
}

pub fn run_at_rho(graph: &Graph, cfg: &ExperimentConfig, rho: f64) -> Result<RunOutput> {
    let start = std::time::Instant::now();
    let mut per_seed = Vec::new();
    let mut artifacts = Vec::new();
    let mut aborted = Vec::new();
    for &seed in &cfg.run.seeds {
        match run_seed(graph, cfg, rho, seed) {
            Ok(a) => {
                per_seed.push(a.report.clone());
                artifacts.push(a);
            }
            Err(e) => {
                eprintln!("seed {seed} aborted: {e}");
                aborted.push(AbortedSeed {
                    seed,
                    error: e.to_string(),
                });
            }
        }
    }
    let report = RunReport {
        schema_version: REPORT_SCHEMA_VERSION,
        rho,
        rule: cfg.hes.rule,
        aggregate: aggregate(&per_seed),
        per_seed,
        aborted,
        elapsed_seconds: if cfg.run.strict {
            None
        } else {
            Some(start.elapsed().as_secs_f64())
        },
    };
    Ok(RunOutput { report, artifacts })
}

pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let graph = cfg.load_graph()?;
    let out = run_at_rho(&graph, cfg, cfg.hes.rho)?;
    if let Some(dir) = &cfg.run.out {
        write_outputs(dir, cfg, &out)?;
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepEntry {
    pub rho: f64,
    pub report: RunReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepReport {
    pub schema_version: u32,
    pub entries: Vec<SweepEntry>,
    /// Chosen on mean validation accuracy only.
    pub best_rho: f64,
    pub best_val_mean: f64,
    /// Test accuracy of the chosen rho, reported but never selected on.
    pub best_test_mean: f64,
}

/// Pick the grid index with the best mean validation accuracy. Inputs are
/// (rho, val mean) pairs, so test metrics cannot flow into the choice.
pub fn select_best_rho(candidates: &[(f64, f64)]) -> usize {
    let mut best = 0;
    for (i, c) in candidates.iter().enumerate() {
        if c.1 > candidates[best].1 {
            best = i;
        }
    }
    best
}

pub fn rho_sweep(cfg: &ExperimentConfig) -> Result<SweepReport> {
    cfg.validate()?;
    let grid = cfg
        .hes
        .grid
        .clone()
        .unwrap_or_else(|| crate::plan::RHO_GRID.to_vec());
    if grid.is_empty() {
        return Err(Error::InvalidArgument("rho grid is empty".into()));
    }
    let graph = cfg.load_graph()?;
    let mut entries = Vec::new();
    for &rho in &grid {
        let out = run_at_rho(&graph, cfg, rho)?;
        entries.push(SweepEntry {
            rho,
            report: out.report,
        });
    }
    let candidates: Vec<(f64, f64)> = entries
        .iter()
        .map(|e| {
            let val = e
                .report
                .aggregate
                .as_ref()
                .map(|a| a.hes_val_mean)
                .unwrap_or(f64::NEG_INFINITY);
            (e.rho, val)
        })
        .collect();
    let best = select_best_rho(&candidates);
    let best_test_mean = entries[best]
        .report
        .aggregate
        .as_ref()
        .map(|a| a.hes_test_mean)
        .unwrap_or(f64::NAN);
    let report = SweepReport {
        schema_version: REPORT_SCHEMA_VERSION,
        best_rho: entries[best].rho,
        best_val_mean: candidates[best].1,
        best_test_mean,
        entries,
    };
    if let Some(dir) = &cfg.run.out {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io {
            path: dir.to_path_buf(),
            source: e,
        })?;
        write_file(
            &dir.join("sweep.json"),
            &serde_json::to_string_pretty(&report).expect("sweep serializes"),
        )?;
    }
    Ok(report)
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    std::fs::write(path, content).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn history_csv(history: &History) -> String {
    let mut s = String::from("epoch,train_loss,val_loss,train_acc,val_acc,test_acc\n");
    for e in history {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            e.epoch, e.train_loss, e.val_loss, e.train_acc, e.val_acc, e.test_acc
        ));
    }
    s
}

/// Self-describing run directory: config snapshot, per-seed plans and
/// histories, and the report JSON.
pub fn write_outputs(dir: &Path, cfg: &ExperimentConfig, out: &RunOutput) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    let config_snapshot =
        toml::to_string_pretty(cfg).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    write_file(&dir.join("config.toml"), &config_snapshot)?;
    for a in &out.artifacts {
        let seed = a.report.seed;
        write_file(&dir.join(format!("plan_seed{seed}.json")), &a.plan.to_json())?;
        write_file(
            &dir.join(format!("history_baseline_seed{seed}.csv")),
            &history_csv(&a.baseline_history),
        )?;
        write_file(
            &dir.join(format!("history_hes_seed{seed}.csv")),
            &history_csv(&a.hes_history),
        )?;
    }
    write_file(
        &dir.join("report.json"),
        &serde_json::to_string_pretty(&out.report).expect("report serializes"),
    )?;
    Ok(())
}

/// Minimal structural validation against the published report schema
/// (docs/run-report.schema.json).
pub fn validate_report_json(v: &serde_json::Value) -> Result<()> {
    let obj = v
        .as_object()
        .ok_or_else(|| Error::InvalidArgument("report is not a JSON object".into()))?;
    let require = |key: &str| {
        obj.get(key)
            .ok_or_else(|| Error::InvalidArgument(format!("report missing key '{key}'")))
    };
    let sv = require("schema_version")?
        .as_u64()
        .ok_or_else(|| Error::InvalidArgument("schema_version must be an integer".into()))?;
    if sv != REPORT_SCHEMA_VERSION as u64 {
        return Err(Error::InvalidArgument(format!(
            "unsupported schema_version {sv}"
        )));
    }
    require("rho")?
        .as_f64()
        .ok_or_else(|| Error::InvalidArgument("rho must be a number".into()))?;
    require("rule")?
        .as_str()
        .ok_or_else(|| Error::InvalidArgument("rule must be a string".into()))?;
    let per_seed = require("per_seed")?
        .as_array()
        .ok_or_else(|| Error::InvalidArgument("per_seed must be an array".into()))?;
    for (i, entry) in per_seed.iter().enumerate() {
        let e = entry.as_object().ok_or_else(|| {
            Error::InvalidArgument(format!("per_seed[{i}] is not an object"))
        })?;
        for key in [
            "seed",
            "baseline_test_acc",
            "hes_test_acc",
            "baseline_val_acc",
            "hes_val_acc",
            "baseline_val_curve",
            "hes_val_curve",
            "plan",
            "baseline_macs",
            "hes_macs",
        ] {
            if !e.contains_key(key) {
                return Err(Error::InvalidArgument(format!(
                    "per_seed[{i}] missing key '{key}'"
                )));
            }
        }
    }
    require("aborted")?
        .as_array()
        .ok_or_else(|| Error::InvalidArgument("aborted must be an array".into()))?;
    if !obj.contains_key("aggregate") {
        return Err(Error::InvalidArgument("report missing key 'aggregate'".into()));
    }
    Ok(())
}
