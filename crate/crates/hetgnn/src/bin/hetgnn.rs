use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use hetgnn::bundle::{bundle_stats, load_bundle, write_bundle};
use hetgnn::gnn::{self, Arch, TrainOptions};
use hetgnn::plan::{StopRule, RHO_GRID};
use hetgnn::proxy::ProxyKind;
use hetgnn::runner::{
    self, DatasetConfig, ExperimentConfig, HesConfig, ModelConfig, RunConfig,
};
use hetgnn::sbm::{generate_sbm, make_splits, SbmSpec};
use hetgnn::theory;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "hetgnn", about = "Heterophily-aware early-stopping GNN toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonRunArgs {
    /// Full experiment config (TOML); direct flags override nothing when
    /// this is given.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset bundle directory.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Model architecture.
    #[arg(long, value_parser = parse_arch, default_value = "gcn")]
    arch: Arch,
    #[arg(long, default_value_t = 2)]
    layers: usize,
    #[arg(long, default_value_t = 64)]
    hidden_dim: usize,
    #[arg(long, default_value_t = 0.5)]
    dropout: f64,
    /// Filtering threshold.
    #[arg(long, default_value_t = 1e-4)]
    rho: f64,
    /// Stop rule: contiguous-ratio or literal-alg1.
    #[arg(long, value_parser = parse_rule, default_value = "contiguous-ratio")]
    rule: StopRule,
    /// Proxy predictor: mlp3, gcn4, or sgc3.
    #[arg(long, default_value = "mlp3")]
    proxy: ProxyKind,
    /// Build the plan from true labels with this homophily threshold.
    #[arg(long)]
    oracle_epsilon: Option<f64>,
    /// Fine-tune the proxy and rebuild the mask every N GNN epochs
    /// (default: two-phase training with a frozen mask).
    #[arg(long)]
    refresh_period: Option<usize>,
    /// Comma-separated seed list.
    #[arg(long, default_value = "0,1,2,3,4", value_parser = parse_seeds)]
    seeds: Seeds,
    /// Deterministic reports (omits timing so reruns are byte-identical).
    #[arg(long)]
    strict: bool,
    /// Output directory for the run artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone)]
struct Seeds(Vec<u64>);

fn parse_seeds(s: &str) -> std::result::Result<Seeds, String> {
    let seeds: std::result::Result<Vec<u64>, _> = s
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse::<u64>().map_err(|e| e.to_string()))
        .collect();
    let seeds = seeds?;
    if seeds.is_empty() {
        return Err("seed list is empty".into());
    }
    Ok(Seeds(seeds))
}

fn parse_arch(s: &str) -> std::result::Result<Arch, String> {
    match s {
        "mlp" => Ok(Arch::Mlp),
        "gcn" => Ok(Arch::Gcn),
        "sgc" => Ok(Arch::Sgc),
        other => Err(format!("unknown arch '{other}' (expected mlp, gcn, or sgc)")),
    }
}

fn parse_rule(s: &str) -> std::result::Result<StopRule, String> {
    match s {
        "contiguous-ratio" => Ok(StopRule::ContiguousRatio),
        "literal-alg1" => Ok(StopRule::LiteralAlg1),
        other => Err(format!(
            "unknown rule '{other}' (expected contiguous-ratio or literal-alg1)"
        )),
    }
}

impl CommonRunArgs {
    fn into_config(self) -> Result<ExperimentConfig> {
        if let Some(path) = &self.config {
            return Ok(ExperimentConfig::from_toml_file(path)?);
        }
        let dataset = self
            .dataset
            .clone()
            .context("either --config or --dataset is required")?;
        let cfg = ExperimentConfig {
            dataset: DatasetConfig {
                path: Some(dataset),
                sbm: None,
            },
            model: ModelConfig {
                arch: self.arch,
                layers: self.layers,
                hidden_dim: self.hidden_dim,
                dropout: self.dropout,
            },
            hes: HesConfig {
                rho: self.rho,
                grid: None,
                rule: self.rule,
                proxy: self.proxy,
                oracle_epsilon: self.oracle_epsilon,
                refresh_period: self.refresh_period,
            },
            run: RunConfig {
                seeds: self.seeds.0.clone(),
                strict: self.strict,
                out: self.out.clone(),
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train the unplanned baseline model only.
    Train(CommonRunArgs),
    /// Full pipeline: proxy, mask, hop scores, plan, then HES + baseline.
    Hes(CommonRunArgs),
    /// Run the pipeline once per rho grid point; select best on validation.
    SweepRho {
        #[command(flatten)]
        common: CommonRunArgs,
        /// Comma-separated rho grid; defaults to the standard grid.
        #[arg(long)]
        grid: Option<String>,
    },
    /// Report dataset statistics and homophily measures.
    Homophily {
        #[arg(long)]
        dataset: PathBuf,
        /// Also report mean k-hop homophily for hops 1..=k.
        #[arg(long)]
        khop: Option<usize>,
    },
    /// Generate a two-block SBM bundle on disk.
    SbmGen {
        #[arg(long, default_value_t = 2)]
        clusters: usize,
        #[arg(long)]
        cluster_size: usize,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        q: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        split_seed: u64,
        /// Permit q > p (outside the analysis regime).
        #[arg(long)]
        allow_q_above_p: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Closed-form SBM spectrum and depth contraction report.
    Theory {
        /// Cluster size N (two clusters of N nodes).
        #[arg(long)]
        cluster_size: usize,
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        #[arg(long, default_value_t = 0.1)]
        q: f64,
        /// Depth L for the contraction product.
        #[arg(long, default_value_t = 10_000)]
        depth: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn finish_run(report: &runner::RunReport) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(report)?);
    if !report.aborted.is_empty() {
        bail!("{} seed(s) aborted", report.aborted.len());
    }
    Ok(())
}

fn cmd_train(args: CommonRunArgs) -> Result<()> {
    let cfg = args.into_config()?;
    let graph = cfg.load_graph()?;
    let spec = cfg.model.spec();
    let mut accs = Vec::new();
    let mut aborted = 0usize;
    for &seed in &cfg.run.seeds {
        match gnn::train(&graph, spec, None, TrainOptions::default(), seed) {
            Ok((model, _)) => {
                let acc = gnn::evaluate(&model, &graph, None, &graph.splits.test)?;
                println!("seed {seed}: test accuracy {acc:.4}");
                accs.push(acc);
            }
            Err(e) => {
                eprintln!("seed {seed} aborted: {e}");
                aborted += 1;
            }
        }
    }
    if !accs.is_empty() {
        let mean = accs.iter().sum::<f64>() / accs.len() as f64;
        println!("mean test accuracy: {mean:.4} over {} seeds", accs.len());
    }
    if aborted > 0 {
        bail!("{aborted} seed(s) aborted");
    }
    Ok(())
}

fn cmd_sweep(common: CommonRunArgs, grid: Option<String>) -> Result<()> {
    let mut cfg = common.into_config()?;
    cfg.hes.grid = match grid {
        Some(s) => {
            let g: std::result::Result<Vec<f64>, _> = s
                .split(',')
                .filter(|t| !t.trim().is_empty())
                .map(|t| t.trim().parse::<f64>())
                .collect();
            Some(g.context("bad --grid value")?)
        }
        None => Some(RHO_GRID.to_vec()),
    };
    let sweep = runner::rho_sweep(&cfg)?;
    println!("{}", serde_json::to_string_pretty(&sweep)?);
    let aborted: usize = sweep.entries.iter().map(|e| e.report.aborted.len()).sum();
    if aborted > 0 {
        bail!("{aborted} seed run(s) aborted across the grid");
    }
    Ok(())
}

fn cmd_homophily(dataset: PathBuf, khop: Option<usize>) -> Result<()> {
    let graph = load_bundle(&dataset)?;
    let name = dataset
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| dataset.display().to_string());
    let stats = bundle_stats(&name, &graph);
    println!("{}", serde_json::to_string_pretty(&stats)?);
    if let Some(k) = khop {
        for hop in 1..=k {
            let mut sum = 0.0;
            let mut count = 0usize;
            for node in 0..graph.num_nodes {
                if let Ok(h) = graph.khop_homophily(node, hop) {
                    sum += h;
                    count += 1;
                }
            }
            if count == 0 {
                println!("hop {hop}: undefined (no node has a {hop}-hop neighborhood)");
            } else {
                println!(
                    "hop {hop}: mean homophily {:.4} over {count} nodes",
                    sum / count as f64
                );
            }
        }
    }
    Ok(())
}

fn cmd_sbm_gen(
    clusters: usize,
    cluster_size: usize,
    p: f64,
    q: f64,
    seed: u64,
    split_seed: u64,
    allow_q_above_p: bool,
    out: PathBuf,
) -> Result<()> {
    let spec = SbmSpec {
        clusters,
        cluster_size,
        p,
        q,
        seed,
        allow_q_above_p,
    };
    let mut graph = generate_sbm(&spec)?;
    graph.splits = make_splits(&graph, (0.48, 0.32, 0.20), split_seed)?;
    let name = format!("sbm_c{clusters}_n{cluster_size}_seed{seed}");
    write_bundle(&graph, &name, &out)?;
    let stats = bundle_stats(&name, &graph);
    println!("{}", serde_json::to_string_pretty(&stats)?);
    println!("bundle written to {}", out.display());
    Ok(())
}

fn cmd_theory(cluster_size: usize, p: f64, q: f64, depth: usize, out: Option<PathBuf>) -> Result<()> {
    let report = theory::validate(cluster_size, p, q, depth)?;
    let json = serde_json::to_string_pretty(&report)?;
    println!("{json}");
    if report.signal_warning {
        eprintln!("warning: p <= q, the signal eigenvalue is non-positive");
    }
    if let Some(path) = out {
        std::fs::write(&path, &json)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Train(args) => cmd_train(args),
        Command::Hes(args) => {
            let cfg = args.into_config()?;
            let out = runner::run(&cfg)?;
            finish_run(&out.report)
        }
        Command::SweepRho { common, grid } => cmd_sweep(common, grid),
        Command::Homophily { dataset, khop } => cmd_homophily(dataset, khop),
        Command::SbmGen {
            clusters,
            cluster_size,
            p,
            q,
            seed,
            split_seed,
            allow_q_above_p,
            out,
        } => cmd_sbm_gen(clusters, cluster_size, p, q, seed, split_seed, allow_q_above_p, out),
        Command::Theory {
            cluster_size,
            p,
            q,
            depth,
            out,
        } => cmd_theory(cluster_size, p, q, depth, out),
    }
}
