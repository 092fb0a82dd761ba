//! Hierarchy-imbalance-aware node classification on graphs.
//!
//! The pipeline embeds a graph in the Poincaré ball to measure how deep each
//! node sits in the hierarchy, computes class-aware Ollivier-Ricci curvature
//! per edge, and trains a two-layer GCN whose aggregation weights come from
//! curvature and whose loss carries a per-node, hierarchy-dependent margin.

pub mod curvature;
pub mod error;
pub mod generators;
pub mod graph;
pub mod harness;
pub mod hyperbolic;
pub mod model;
pub mod stats;

pub use error::{Error, Result};
pub use graph::{Graph, SplitMask};
