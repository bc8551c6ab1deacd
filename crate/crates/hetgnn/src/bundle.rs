//! On-disk graph bundle: a directory of plain-text files.
//!
//! Layout:
//!   meta.json     {"name", "num_nodes", "num_classes", "feature_dim"}
//!   edges.tsv     one undirected edge per line, "src<TAB>dst", each pair once
//!   features.tsv  one node per line, feature_dim tab-separated decimals
//!   labels.tsv    "node_id<TAB>label"
//!   splits.json   {"train": [...], "val": [...], "test": [...]}
//!
//! All files are UTF-8 with LF line endings; decimals use a dot separator.

use crate::error::{Error, Result};
use crate::graph::{Graph, Splits};
use crate::matrix::DenseMatrix;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BundleMeta {
    pub name: String,
    pub num_nodes: usize,
    pub num_classes: usize,
    pub feature_dim: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SplitsJson {
    train: Vec<usize>,
    val: Vec<usize>,
    test: Vec<usize>,
}

/// Summary printed after a successful load.
#[derive(Debug, Clone, Serialize)]
pub struct BundleStats {
    pub name: String,
    pub num_nodes: usize,
    pub num_undirected_edges: usize,
    pub num_classes: usize,
    pub feature_dim: usize,
    pub graph_homophily: Option<f64>,
    pub isolated_nodes: usize,
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn load_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Load {
        file: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

/// Load a graph bundle directory, validating all invariants.
pub fn load_bundle(dir: &Path) -> Result<Graph> {
    let meta_path = dir.join("meta.json");
    let meta: BundleMeta = serde_json::from_str(&read_file(&meta_path)?)
        .map_err(|e| load_err(&meta_path, 0, format!("invalid meta.json: {e}")))?;

    // edges
    let edges_path = dir.join("edges.tsv");
    let mut edges = Vec::new();
    for (lineno, line) in read_file(&edges_path)?.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let mut it = line.split('\t');
        let parse = |tok: Option<&str>| -> Result<usize> {
            tok.ok_or_else(|| load_err(&edges_path, lineno + 1, "expected src<TAB>dst"))?
                .parse()
                .map_err(|e| load_err(&edges_path, lineno + 1, format!("bad node id: {e}")))
        };
        let src = parse(it.next())?;
        let dst = parse(it.next())?;
        if src >= meta.num_nodes || dst >= meta.num_nodes {
            return Err(load_err(
                &edges_path,
                lineno + 1,
                format!("edge ({src}, {dst}) out of range (N={})", meta.num_nodes),
            ));
        }
        edges.push((src, dst));
    }

    // features
    let feat_path = dir.join("features.tsv");
    let mut data = Vec::with_capacity(meta.num_nodes * meta.feature_dim);
    let feat_text = read_file(&feat_path)?;
    let mut feat_lines = 0usize;
    for (lineno, line) in feat_text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        feat_lines += 1;
        let mut count = 0usize;
        for tok in line.split('\t') {
            let v: f64 = tok
                .parse()
                .map_err(|e| load_err(&feat_path, lineno + 1, format!("bad decimal: {e}")))?;
            data.push(v);
            count += 1;
        }
        if count != meta.feature_dim {
            return Err(load_err(
                &feat_path,
                lineno + 1,
                format!("expected {} features, found {count}", meta.feature_dim),
            ));
        }
    }
    if feat_lines != meta.num_nodes {
        return Err(load_err(
            &feat_path,
            feat_lines,
            format!("expected {} feature rows, found {feat_lines}", meta.num_nodes),
        ));
    }
    let features = DenseMatrix {
        rows: meta.num_nodes,
        cols: meta.feature_dim,
        data,
    };

    // labels
    let labels_path = dir.join("labels.tsv");
    let mut labels = vec![usize::MAX; meta.num_nodes];
    for (lineno, line) in read_file(&labels_path)?.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let mut it = line.split('\t');
        let node: usize = it
            .next()
            .ok_or_else(|| load_err(&labels_path, lineno + 1, "expected node_id<TAB>label"))?
            .parse()
            .map_err(|e| load_err(&labels_path, lineno + 1, format!("bad node id: {e}")))?;
        let label: usize = it
            .next()
            .ok_or_else(|| load_err(&labels_path, lineno + 1, "expected node_id<TAB>label"))?
            .parse()
            .map_err(|e| load_err(&labels_path, lineno + 1, format!("bad label: {e}")))?;
        if node >= meta.num_nodes {
            return Err(load_err(
                &labels_path,
                lineno + 1,
                format!("node id {node} out of range"),
            ));
        }
        if label >= meta.num_classes {
            return Err(load_err(
                &labels_path,
                lineno + 1,
                format!("label {label} out of range (C={})", meta.num_classes),
            ));
        }
        labels[node] = label;
    }
    if let Some(missing) = labels.iter().position(|&l| l == usize::MAX) {
        return Err(load_err(
            &labels_path,
            0,
            format!("node {missing} has no label"),
        ));
    }

    // splits
    let splits_path = dir.join("splits.json");
    let sj: SplitsJson = serde_json::from_str(&read_file(&splits_path)?)
        .map_err(|e| load_err(&splits_path, 0, format!("invalid splits.json: {e}")))?;
    let splits = Splits {
        train: sj.train,
        val: sj.val,
        test: sj.test,
    };

    Graph::new(
        meta.num_nodes,
        meta.num_classes,
        &edges,
        features,
        labels,
        splits,
    )
}

pub fn bundle_stats(name: &str, graph: &Graph) -> BundleStats {
    BundleStats {
        name: name.to_string(),
        num_nodes: graph.num_nodes,
        num_undirected_edges: graph.num_undirected_edges(),
        num_classes: graph.num_classes,
        feature_dim: graph.features.cols,
        graph_homophily: graph.graph_homophily().ok(),
        isolated_nodes: graph.isolated_node_count(),
    }
}

/// Format a decimal so that parsing it back reproduces the value exactly.
fn fmt_f64(v: f64) -> String {
    let mut s = format!("{v}");
    if !s.contains('.') && !s.contains('e') && !s.contains("inf") && !s.contains("NaN") {
        s.push_str(".0");
    }
    s
}

/// Write a graph as a bundle directory. Round-trips through `load_bundle`.
pub fn write_bundle(graph: &Graph, name: &str, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    let write = |file: &str, content: String| -> Result<()> {
        let path = dir.join(file);
        std::fs::write(&path, content).map_err(|e| Error::Io { path, source: e })
    };

    let meta = BundleMeta {
        name: name.to_string(),
        num_nodes: graph.num_nodes,
        num_classes: graph.num_classes,
        feature_dim: graph.features.cols,
    };
    write(
        "meta.json",
        serde_json::to_string_pretty(&meta).expect("meta serializes") + "\n",
    )?;

    let mut edges = String::new();
    for (u, v) in graph.undirected_edges() {
        writeln!(edges, "{u}\t{v}").unwrap();
    }
    write("edges.tsv", edges)?;

    let mut feats = String::new();
    for i in 0..graph.num_nodes {
        let row = graph.features.row(i);
        let line: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
        writeln!(feats, "{}", line.join("\t")).unwrap();
    }
    write("features.tsv", feats)?;

    let mut labels = String::new();
    for (i, &l) in graph.labels.iter().enumerate() {
        writeln!(labels, "{i}\t{l}").unwrap();
    }
    write("labels.tsv", labels)?;

    let sj = SplitsJson {
        train: graph.splits.train.clone(),
        val: graph.splits.val.clone(),
        test: graph.splits.test.clone(),
    };
    write(
        "splits.json",
        serde_json::to_string_pretty(&sj).expect("splits serialize") + "\n",
    )?;
    Ok(())
}
