//! Cohort training of shallow graph neural networks by mutual learning.
//!
//! * [`ndtape`]: dense/sparse kernels with reverse-mode differentiation
//! * [`graphdata`]: datasets, loaders, graph operators, splits, generators
//! * [`models`]: GCN, GAT, GraphSage and MLP forward passes
//! * [`cohort`]: mutual-learning losses, adaptive logit weighting, Adam,
//!   cohort training and distillation into an MLP
//! * [`analysis`]: CKA, ensembles, Wilcoxon signed-rank, metric aggregation

pub mod analysis;
pub mod blob;
pub mod cohort;
mod error;
pub mod graphdata;
pub mod models;
pub mod ndtape;
pub mod rng;

pub use error::{Error, Result};
