//! Synthetic graphs: the deterministic Ravasz-Barabási hierarchical network
//! model (HNM), a three-community variant of it, and Barabási-Albert
//! preferential attachment.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

const MAX_NODES: u64 = 1_000_000;

/// Coarse hierarchy tier of an HNM node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HierarchyLevel {
    Top,
    Middle,
    Bottom,
}

impl fmt::Display for HierarchyLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HierarchyLevel::Top => "top",
            HierarchyLevel::Middle => "middle",
            HierarchyLevel::Bottom => "bottom",
        })
    }
}

impl FromStr for HierarchyLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "top" => Ok(HierarchyLevel::Top),
            "middle" => Ok(HierarchyLevel::Middle),
            "bottom" => Ok(HierarchyLevel::Bottom),
            _ => Err(Error::InvalidArgument(format!(
                "unknown hierarchy level {s:?}"
            ))),
        }
    }
}

/// Per-node generation (the replication step that created the node, 1-based).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HnmAnnotation {
    pub generation: Vec<usize>,
    pub iterations: usize,
}

impl HnmAnnotation {
    /// Bottom is the last generation, middle the one before, top everything
    /// older. With five iterations this is top = 1-3, middle = 4, bottom = 5.
    pub fn level(&self, v: usize) -> HierarchyLevel {
        let g = self.generation[v];
        if g >= self.iterations {
            HierarchyLevel::Bottom
        } else if g + 1 == self.iterations {
            HierarchyLevel::Middle
        } else {
            HierarchyLevel::Top
        }
    }
}

/// Output of the HNM generators.
#[derive(Debug, Clone)]
pub struct HnmGraph {
    pub graph: Graph,
    pub annotation: HnmAnnotation,
    /// Central hub of each community (one entry for [`hnm_generate`]).
    pub hubs: Vec<usize>,
}

/// Deterministic hierarchical network of `module_size^iterations` nodes.
///
/// Iteration 1 is a complete graph on `module_size` nodes whose node 0 is the
/// hub and the rest are peripheral. Each later iteration adds
/// `module_size - 1` replicas of the current graph and wires every peripheral
/// node of every replica to the original hub; the replicas' peripheral nodes
/// become the peripheral set of the enlarged graph.
pub fn hnm_generate(module_size: usize, iterations: usize) -> Result<HnmGraph> {
    if module_size < 3 {
        return Err(Error::InvalidArgument(format!(
            "module_size must be at least 3, got {module_size}"
        )));
    }
    if iterations < 1 {
        return Err(Error::InvalidArgument(
            "iterations must be at least 1".into(),
        ));
    }
    let total = (module_size as u64)
        .checked_pow(iterations as u32)
        .filter(|&t| t <= MAX_NODES)
        .ok_or(Error::TooLarge(
            (module_size as u64).saturating_pow(iterations as u32),
        ))?;

    let mut edges = Vec::new();
    for u in 0..module_size {
        for v in u + 1..module_size {
            edges.push((u, v));
        }
    }
    let mut generation = vec![1usize; module_size];
    let mut peripheral: Vec<usize> = (1..module_size).collect();
    let mut size = module_size;

    for iter in 2..=iterations {
        let base_edges = edges.len();
        let mut next_peripheral = Vec::with_capacity(peripheral.len() * (module_size - 1));
        for r in 1..module_size {
            let offset = r * size;
            for i in 0..base_edges {
                let (u, v) = edges[i];
                edges.push((u + offset, v + offset));
            }
            for &p in &peripheral {
                edges.push((p + offset, 0));
                next_peripheral.push(p + offset);
            }
        }
        generation.resize(size * module_size, iter);
        peripheral = next_peripheral;
        size *= module_size;
    }
    debug_assert_eq!(size as u64, total);

    let graph = Graph::from_edges(size, edges)?;
    Ok(HnmGraph {
        graph,
        annotation: HnmAnnotation {
            generation,
            iterations,
        },
        hubs: vec![0],
    })
}

/// Three identical 4-node-module HNM replicas whose hubs form a triangle.
/// Node labels are the replica index.
pub fn hnm_three_community(iterations: usize) -> Result<HnmGraph> {
    if iterations < 2 {
        return Err(Error::InvalidArgument(format!(
            "three-community HNM needs at least 2 iterations, got {iterations}"
        )));
    }
    let base = hnm_generate(4, iterations)?;
    let m = base.graph.node_count();
    let mut edges = Vec::with_capacity(3 * base.graph.edge_count() + 3);
    for c in 0..3 {
        edges.extend(
            base.graph
                .edges()
                .iter()
                .map(|&(u, v)| (u + c * m, v + c * m)),
        );
    }
    let hubs = vec![0, m, 2 * m];
    edges.extend([(hubs[0], hubs[1]), (hubs[1], hubs[2]), (hubs[0], hubs[2])]);
    let labels = (0..3 * m).map(|v| Some(v / m)).collect();
    let graph = Graph::from_edges(3 * m, edges)?.with_labels(labels, 3)?;
    let generation = (0..3)
        .flat_map(|_| base.annotation.generation.iter().copied())
        .collect();
    Ok(HnmGraph {
        graph,
        annotation: HnmAnnotation {
            generation,
            iterations,
        },
        hubs,
    })
}

/// Barabási-Albert graph: a complete seed graph on `m + 1` nodes, then each
/// new node attaches to `m` distinct existing nodes chosen with probability
/// proportional to their current degree.
pub fn ba_generate(n: usize, m: usize, seed: u64) -> Result<Graph> {
    if m < 1 || n <= m {
        return Err(Error::InvalidArgument(format!(
            "Barabási-Albert needs n > m >= 1, got n={n}, m={m}"
        )));
    }
    if n as u64 > MAX_NODES {
        return Err(Error::TooLarge(n as u64));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::with_capacity(m * n);
    // every edge endpoint once: sampling uniformly from this list is
    // degree-proportional sampling
    let mut endpoints = Vec::with_capacity(2 * m * n);
    for u in 0..=m {
        for v in u + 1..=m {
            edges.push((u, v));
            endpoints.extend([u, v]);
        }
    }
    let mut targets = Vec::with_capacity(m);
    for new in m + 1..n {
        targets.clear();
        while targets.len() < m {
            let t = endpoints[rng.gen_range(0..endpoints.len())];
            if !targets.contains(&t) {
                targets.push(t);
            }
        }
        for &t in &targets {
            edges.push((new, t));
            endpoints.extend([new, t]);
        }
    }
    Graph::from_edges(n, edges)
}
