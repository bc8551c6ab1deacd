//! Graph-learning toolkit for heterophilic node classification with
//! per-node receptive-field early stopping.
//!
//! The pipeline: train a cheap proxy predictor, turn its softmax outputs
//! into edge homophily strengths, score each node's k-hop neighborhoods,
//! assign a per-node stop depth, and train a GCN/SGC whose aggregation is
//! masked beyond each node's depth. Supporting modules cover dataset IO,
//! SBM synthesis, MAC accounting and the closed-form SBM spectral theory.

pub mod bundle;
pub mod eigen;
pub mod error;
pub mod gnn;
pub mod graph;
pub mod macs;
pub mod mask;
pub mod matrix;
pub mod nn;
pub mod plan;
pub mod propagation;
pub mod proxy;
pub mod runner;
pub mod sbm;
pub mod scores;
pub mod theory;

pub use error::{Error, Result};
