//! Undirected graph storage, topological statistics and dataset ingestion.

mod analysis;
mod features;
pub mod io;

use std::collections::BTreeSet;

pub use analysis::{
    betweenness, clustering_by_degree, edge_homophily, local_clustering, mean_neighbor_degree,
    neighbor_correlation, shortest_path_lengths, CorrelationPoint, Quantity, UNREACHABLE,
};
pub use features::Features;

use crate::error::{Error, Result};

/// Immutable undirected simple graph in compressed adjacency form.
///
/// Edges are stored once as `(u, v)` with `u < v`, sorted; neighbor lists are
/// sorted. Labels are optional per node and always below `num_classes`.
#[derive(Debug, Clone)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    features: Option<Features>,
    labels: Vec<Option<usize>>,
    num_classes: usize,
}

impl Graph {
    /// Builds a graph from an undirected edge list. Self-loops are dropped and
    /// duplicate pairs (in either orientation) collapse to one edge.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            for id in [u, v] {
                if id >= n {
                    return Err(Error::NodeOutOfRange { id, n });
                }
            }
            if u != v {
                set.insert((u.min(v), u.max(v)));
            }
        }
        let edges: Vec<(usize, usize)> = set.into_iter().collect();

        let mut degree = vec![0usize; n];
        for &(u, v) in &edges {
            degree[u] += 1;
            degree[v] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut cursor = offsets[..n].to_vec();
        let mut neighbors = vec![0usize; offsets[n]];
        for &(u, v) in &edges {
            neighbors[cursor[u]] = v;
            cursor[u] += 1;
            neighbors[cursor[v]] = u;
            cursor[v] += 1;
        }
        for u in 0..n {
            neighbors[offsets[u]..offsets[u + 1]].sort_unstable();
        }

        Ok(Graph {
            n,
            edges,
            offsets,
            neighbors,
            features: None,
            labels: vec![None; n],
            num_classes: 0,
        })
    }

    /// Attaches labels. `num_classes` must exceed every present label.
    pub fn with_labels(mut self, labels: Vec<Option<usize>>, num_classes: usize) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: labels.len(),
            });
        }
        for (node, l) in labels.iter().enumerate() {
            if let Some(label) = *l {
                if label >= num_classes {
                    return Err(Error::LabelOutOfRange {
                        node,
                        label,
                        classes: num_classes,
                    });
                }
            }
        }
        self.labels = labels;
        self.num_classes = num_classes;
        Ok(self)
    }

    pub fn with_features(mut self, features: Features) -> Result<Self> {
        if features.nrows() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: features.nrows(),
            });
        }
        self.features = Some(features);
        Ok(self)
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }

    /// Degree of `v`, failing on an out-of-range id.
    pub fn degree(&self, v: usize) -> Result<usize> {
        self.check_node(v)?;
        Ok(self.offsets[v + 1] - self.offsets[v])
    }

    pub(crate) fn deg(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n).map(|v| self.deg(v)).collect()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n && v < self.n && self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Index of `(min, max)` in [`Graph::edges`].
    pub fn edge_index(&self, u: usize, v: usize) -> Option<usize> {
        self.edges.binary_search(&(u.min(v), u.max(v))).ok()
    }

    pub fn features(&self) -> Option<&Features> {
        self.features.as_ref()
    }

    pub fn labels(&self) -> &[Option<usize>] {
        &self.labels
    }

    pub fn label(&self, v: usize) -> Option<usize> {
        self.labels[v]
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub(crate) fn check_node(&self, v: usize) -> Result<()> {
        if v < self.n {
            Ok(())
        } else {
            Err(Error::NodeOutOfRange { id: v, n: self.n })
        }
    }

    /// Relabels nodes: node `v` of `self` becomes node `perm[v]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: perm.len(),
            });
        }
        let mut g = Graph::from_edges(self.n, self.edges.iter().map(|&(u, v)| (perm[u], perm[v])))?;
        let mut labels = vec![None; self.n];
        let mut inverse = vec![0; self.n];
        for v in 0..self.n {
            labels[perm[v]] = self.labels[v];
            inverse[perm[v]] = v;
        }
        g = g.with_labels(labels, self.num_classes)?;
        if let Some(x) = &self.features {
            g = g.with_features(x.permute_rows(&inverse))?;
        }
        Ok(g)
    }

    /// Subgraph with `removed` edges deleted; node set, labels and features kept.
    pub fn without_edges(&self, removed: &[(usize, usize)]) -> Result<Self> {
        let drop: BTreeSet<(usize, usize)> =
            removed.iter().map(|&(u, v)| (u.min(v), u.max(v))).collect();
        let mut g = Graph::from_edges(
            self.n,
            self.edges.iter().copied().filter(|e| !drop.contains(e)),
        )?
        .with_labels(self.labels.clone(), self.num_classes)?;
        if let Some(x) = &self.features {
            g = g.with_features(x.clone())?;
        }
        Ok(g)
    }

    /// Connected components as a per-node component id, ids in first-seen order.
    pub fn components(&self) -> Vec<usize> {
        let mut comp = vec![usize::MAX; self.n];
        let mut next = 0;
        let mut stack = Vec::new();
        for s in 0..self.n {
            if comp[s] != usize::MAX {
                continue;
            }
            comp[s] = next;
            stack.push(s);
            while let Some(u) = stack.pop() {
                for &w in self.neighbors(u) {
                    if comp[w] == usize::MAX {
                        comp[w] = next;
                        stack.push(w);
                    }
                }
            }
            next += 1;
        }
        comp
    }
}

/// Disjoint train/validation/test node sets.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SplitMask {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitMask {
    /// Validates disjointness and range against a graph of `n` nodes.
    pub fn new(train: Vec<usize>, val: Vec<usize>, test: Vec<usize>, n: usize) -> Result<Self> {
        let mut seen = vec![false; n];
        for &v in train.iter().chain(&val).chain(&test) {
            if v >= n {
                return Err(Error::NodeOutOfRange { id: v, n });
            }
            if seen[v] {
                return Err(Error::InvalidArgument(format!(
                    "node {v} appears in more than one split set"
                )));
            }
            seen[v] = true;
        }
        Ok(SplitMask { train, val, test })
    }

    /// A mask with every labeled node in train; handy for analyses.
    pub fn all_labeled(g: &Graph) -> Self {
        let train = (0..g.node_count())
            .filter(|&v| g.label(v).is_some())
            .collect();
        SplitMask {
            train,
            val: Vec::new(),
            test: Vec::new(),
        }
    }

    pub fn empty() -> Self {
        SplitMask {
            train: Vec::new(),
            val: Vec::new(),
            test: Vec::new(),
        }
    }

    /// Per-node membership flag for the training set.
    pub fn train_flags(&self, n: usize) -> Vec<bool> {
        let mut flags = vec![false; n];
        for &v in &self.train {
            flags[v] = true;
        }
        flags
    }
}
