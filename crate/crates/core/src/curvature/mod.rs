//! Class-aware Ollivier-Ricci curvature.
//!
//! Each endpoint of an edge spreads unit mass over itself and its neighbors:
//! `α` stays on the node, and neighbor `w` receives a share proportional to
//! `b^{-D_w · d(u,w)^p}`, where `D_w` is the fraction of `w`'s neighbors that
//! are training nodes with `w`'s own training label (0 if `w` is not a
//! training node). Curvature compares the two distributions through the
//! exact Wasserstein-1 distance.

mod transport;

use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use transport::{solve_transport, TransportPlan};

use crate::error::{Error, Result};
use crate::graph::{Graph, SplitMask};
use crate::hyperbolic::PoincareEmbedding;

/// How the transport cost is turned into a curvature value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KappaForm {
    /// `1 - W/d`
    #[default]
    Standard,
    /// `W/d`
    Literal,
}

/// Ground metric for mass weights and transport costs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroundMetric {
    #[default]
    Hop,
    /// Poincaré distance between embedded endpoints.
    Embedding,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurvatureConfig {
    pub alpha: f64,
    pub p: f64,
    /// Base of the exponential neighbor weighting.
    pub base: f64,
    pub kappa: KappaForm,
    pub ground: GroundMetric,
}

impl Default for CurvatureConfig {
    fn default() -> Self {
        CurvatureConfig {
            alpha: 0.5,
            p: 2.0,
            base: std::f64::consts::E,
            kappa: KappaForm::Standard,
            ground: GroundMetric::Hop,
        }
    }
}

/// Probability mass over a node and its neighbors.
#[derive(Debug, Clone, PartialEq)]
pub struct MassDistribution {
    pub owner: usize,
    /// `(node, mass)`, owner first, then neighbors in ascending id order.
    pub support: Vec<(usize, f64)>,
}

impl MassDistribution {
    pub fn total(&self) -> f64 {
        self.support.iter().map(|s| s.1).sum()
    }

    pub fn mass_of(&self, node: usize) -> f64 {
        self.support
            .iter()
            .find(|s| s.0 == node)
            .map_or(0.0, |s| s.1)
    }
}

/// Curvature value of every stored edge, aligned with [`Graph::edges`].
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeCurvatureTable {
    edges: Vec<(usize, usize)>,
    kappa: Vec<f64>,
}

impl EdgeCurvatureTable {
    /// Builds a table from `(u, v, κ)` rows, which must cover every edge of `g`
    /// exactly once in either orientation.
    pub fn from_rows(g: &Graph, rows: &[(usize, usize, f64)]) -> Result<Self> {
        let mut kappa = vec![f64::NAN; g.edge_count()];
        for &(u, v, k) in rows {
            let idx = g.edge_index(u, v).ok_or(Error::NotAnEdge(u, v))?;
            kappa[idx] = k;
        }
        if let Some(i) = kappa.iter().position(|k| k.is_nan()) {
            let (u, v) = g.edges()[i];
            return Err(Error::MissingEdge(u, v));
        }
        Ok(EdgeCurvatureTable {
            edges: g.edges().to_vec(),
            kappa,
        })
    }

    pub fn len(&self) -> usize {
        self.kappa.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kappa.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.kappa
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// κ of `(u, v)` in either orientation.
    pub fn get(&self, u: usize, v: usize) -> Option<f64> {
        self.edges
            .binary_search(&(u.min(v), u.max(v)))
            .ok()
            .map(|i| self.kappa[i])
    }

    /// Writes `u,v,kappa` rows with a header.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let err = |e| Error::io(path, e);
        writeln!(w, "u,v,kappa").map_err(err)?;
        for (&(u, v), k) in self.edges.iter().zip(&self.kappa) {
            writeln!(w, "{u},{v},{k:?}").map_err(err)?;
        }
        w.flush().map_err(err)
    }

    pub fn read_csv(path: &Path, g: &Graph) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (i == 0 && line.starts_with('u')) {
                continue;
            }
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            let bad = || Error::parse(path, i + 1, "expected u,v,kappa");
            if f.len() != 3 {
                return Err(bad());
            }
            rows.push((
                f[0].parse().map_err(|_| bad())?,
                f[1].parse().map_err(|_| bad())?,
                f[2].parse().map_err(|_| bad())?,
            ));
        }
        Self::from_rows(g, &rows)
    }
}

/// Curvature computation bound to a graph, a label mask and a configuration.
pub struct RicciCurvature<'a> {
    graph: &'a Graph,
    train: Vec<bool>,
    config: CurvatureConfig,
    embedding: Option<&'a PoincareEmbedding>,
}

impl fmt::Debug for RicciCurvature<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RicciCurvature")
            .field("config", &self.config)
            .field("nodes", &self.graph.node_count())
            .finish()
    }
}

impl<'a> RicciCurvature<'a> {
    /// Only labels of nodes in `mask.train` are visible.
    pub fn new(graph: &'a Graph, mask: &SplitMask, config: CurvatureConfig) -> Result<Self> {
        if !(0.0..=1.0).contains(&config.alpha) {
            return Err(Error::InvalidArgument(format!(
                "alpha must lie in [0, 1], got {}",
                config.alpha
            )));
        }
        if !(config.base > 0.0) {
            return Err(Error::InvalidArgument(
                "exponential base must be positive".into(),
            ));
        }
        for &v in &mask.train {
            graph.check_node(v)?;
        }
        Ok(RicciCurvature {
            graph,
            train: mask.train_flags(graph.node_count()),
            config,
            embedding: None,
        })
    }

    /// Required when the ground metric is [`GroundMetric::Embedding`].
    pub fn with_embedding(mut self, embedding: &'a PoincareEmbedding) -> Result<Self> {
        if embedding.len() != self.graph.node_count() {
            return Err(Error::DimensionMismatch {
                expected: self.graph.node_count(),
                got: embedding.len(),
            });
        }
        self.embedding = Some(embedding);
        Ok(self)
    }

    fn visible_label(&self, v: usize) -> Option<usize> {
        if self.train[v] {
            self.graph.label(v)
        } else {
            None
        }
    }

    /// Fraction of `u`'s neighbors that are training nodes of class `class`.
    /// Isolated nodes give 0.
    pub fn label_distribution(&self, u: usize, class: usize) -> Result<f64> {
        self.graph.check_node(u)?;
        let nb = self.graph.neighbors(u);
        if nb.is_empty() {
            return Ok(0.0);
        }
        let hits = nb
            .iter()
            .filter(|&&w| self.visible_label(w) == Some(class))
            .count();
        Ok(hits as f64 / nb.len() as f64)
    }

    fn ground(&self, a: usize, b: usize) -> Result<f64> {
        match self.config.ground {
            GroundMetric::Hop => Ok(1.0),
            GroundMetric::Embedding => self.embedding.map(|e| e.distance(a, b)).ok_or_else(|| {
                Error::InvalidArgument("embedding ground metric needs an embedding".into())
            }),
        }
    }

    /// Mass distribution of `u`; fails for isolated nodes.
    pub fn mass_distribution(&self, u: usize) -> Result<MassDistribution> {
        self.graph.check_node(u)?;
        let nb = self.graph.neighbors(u);
        if nb.is_empty() {
            return Err(Error::IsolatedNode(u));
        }
        let alpha = self.config.alpha;
        let mut weights = Vec::with_capacity(nb.len());
        for &w in nb {
            let d = match self.visible_label(w) {
                Some(y) => self.label_distribution(w, y)?,
                None => 0.0,
            };
            let dist = self.ground(u, w)?;
            weights.push(self.config.base.powf(-d * dist.powf(self.config.p)));
        }
        let total: f64 = weights.iter().sum();
        let mut support = Vec::with_capacity(nb.len() + 1);
        support.push((u, alpha));
        support.extend(
            nb.iter()
                .zip(weights)
                .map(|(&w, x)| (w, (1.0 - alpha) * x / total)),
        );
        Ok(MassDistribution { owner: u, support })
    }

    /// κ of the edge `(u, v)`.
    pub fn edge(&self, u: usize, v: usize) -> Result<f64> {
        let mut ws = HopWorkspace::new(self.graph.node_count());
        self.edge_with(u, v, &mut ws)
    }

    fn edge_with(&self, u: usize, v: usize, ws: &mut HopWorkspace) -> Result<f64> {
        if !self.graph.has_edge(u, v) {
            return Err(Error::NotAnEdge(u, v));
        }
        // orient so the result does not depend on argument order
        let (a, b) = (u.min(v), u.max(v));
        let ma = self.mass_distribution(a)?;
        let mb = self.mass_distribution(b)?;
        let xs: Vec<usize> = ma.support.iter().map(|s| s.0).collect();
        let ys: Vec<usize> = mb.support.iter().map(|s| s.0).collect();
        let cost = match self.config.ground {
            GroundMetric::Hop => ws.costs(self.graph, &xs, &ys),
            GroundMetric::Embedding => {
                let e = self.embedding.ok_or_else(|| {
                    Error::InvalidArgument("embedding ground metric needs an embedding".into())
                })?;
                xs.iter()
                    .flat_map(|&x| ys.iter().map(move |&y| e.distance(x, y)))
                    .collect()
            }
        };
        let w = transport_cost(&ma, &mb, &cost)?;
        let d = self.ground(a, b)?;
        Ok(match self.config.kappa {
            KappaForm::Standard => 1.0 - w / d,
            KappaForm::Literal => w / d,
        })
    }

    /// κ for every edge, computed in parallel; order follows [`Graph::edges`].
    pub fn table(&self) -> Result<EdgeCurvatureTable> {
        let n = self.graph.node_count();
        let kappa = self
            .graph
            .edges()
            .par_iter()
            .map_init(
                || HopWorkspace::new(n),
                |ws, &(u, v)| self.edge_with(u, v, ws),
            )
            .collect::<Result<Vec<_>>>()?;
        Ok(EdgeCurvatureTable {
            edges: self.graph.edges().to_vec(),
            kappa,
        })
    }
}

fn transport_cost(mu: &MassDistribution, mv: &MassDistribution, cost: &[f64]) -> Result<f64> {
    let supply: Vec<f64> = mu.support.iter().map(|s| s.1).collect();
    let demand: Vec<f64> = mv.support.iter().map(|s| s.1).collect();
    Ok(solve_transport(&supply, &demand, cost)?.cost)
}

/// Hop distances between the two supports of an edge.
///
/// Supports of adjacent endpoints are never more than three hops apart, so
/// only the 2-hop ball of each source is explored and anything outside it is
/// at distance 3.
struct HopWorkspace {
    stamp: Vec<u32>,
    dist: Vec<u8>,
    epoch: u32,
}

impl HopWorkspace {
    fn new(n: usize) -> Self {
        HopWorkspace {
            stamp: vec![0; n],
            dist: vec![0; n],
            epoch: 0,
        }
    }

    fn costs(&mut self, g: &Graph, xs: &[usize], ys: &[usize]) -> Vec<f64> {
        let mut out = Vec::with_capacity(xs.len() * ys.len());
        for &x in xs {
            self.epoch += 1;
            let e = self.epoch;
            self.stamp[x] = e;
            self.dist[x] = 0;
            for &w in g.neighbors(x) {
                self.stamp[w] = e;
                self.dist[w] = 1;
            }
            for &w in g.neighbors(x) {
                for &z in g.neighbors(w) {
                    if self.stamp[z] != e {
                        self.stamp[z] = e;
                        self.dist[z] = 2;
                    }
                }
            }
            out.extend(ys.iter().map(|&y| {
                if self.stamp[y] == e {
                    self.dist[y] as f64
                } else {
                    3.0
                }
            }));
        }
        out
    }
}

/// Fraction of `u`'s neighbors that are training nodes labeled `class`.
pub fn label_distribution(g: &Graph, u: usize, class: usize, mask: &SplitMask) -> Result<f64> {
    RicciCurvature::new(g, mask, CurvatureConfig::default())?.label_distribution(u, class)
}

/// Mass distribution of `u` with hop ground metric.
pub fn mass_distribution(
    g: &Graph,
    u: usize,
    alpha: f64,
    p: f64,
    mask: &SplitMask,
) -> Result<MassDistribution> {
    let config = CurvatureConfig {
        alpha,
        p,
        ..CurvatureConfig::default()
    };
    RicciCurvature::new(g, mask, config)?.mass_distribution(u)
}

/// Exact Wasserstein-1 distance between two distributions under `ground`.
/// Fails when any pair of support nodes is infinitely far apart.
pub fn wasserstein(
    mu: &MassDistribution,
    mv: &MassDistribution,
    ground: impl Fn(usize, usize) -> f64,
) -> Result<f64> {
    let mut cost = Vec::with_capacity(mu.support.len() * mv.support.len());
    for &(x, _) in &mu.support {
        for &(y, _) in &mv.support {
            let c = ground(x, y);
            if !c.is_finite() {
                return Err(Error::InfiniteGroundDistance(x, y));
            }
            cost.push(c);
        }
    }
    transport_cost(mu, mv, &cost)
}

/// κ of one edge with hop ground metric.
pub fn class_aware_ricci(
    g: &Graph,
    edge: (usize, usize),
    config: &CurvatureConfig,
    mask: &SplitMask,
) -> Result<f64> {
    RicciCurvature::new(g, mask, config.clone())?.edge(edge.0, edge.1)
}

/// κ for every edge of `g`.
pub fn curvature_table(
    g: &Graph,
    config: &CurvatureConfig,
    mask: &SplitMask,
) -> Result<EdgeCurvatureTable> {
    RicciCurvature::new(g, mask, config.clone())?.table()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::shortest_path_lengths;

    fn path3() -> Graph {
        Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap()
    }

    fn mask_of(train: &[usize]) -> SplitMask {
        SplitMask {
            train: train.to_vec(),
            val: vec![],
            test: vec![],
        }
    }

    #[test]
    fn label_distribution_examples() {
        // hub 0 with neighbors labeled 1,1,2,2
        let g = Graph::from_edges(5, (1..5).map(|i| (0, i)))
            .unwrap()
            .with_labels(vec![None, Some(1), Some(1), Some(2), Some(2)], 3)
            .unwrap();
        let all = mask_of(&[1, 2, 3, 4]);
        assert_eq!(label_distribution(&g, 0, 1, &all).unwrap(), 0.5);
        let none = SplitMask::empty();
        for c in 0..3 {
            assert_eq!(label_distribution(&g, 0, c, &none).unwrap(), 0.0);
        }
        // one of three neighbors visible
        let g3 = Graph::from_edges(4, (1..4).map(|i| (0, i)))
            .unwrap()
            .with_labels(vec![None, Some(1), Some(1), Some(1)], 2)
            .unwrap();
        let d = label_distribution(&g3, 0, 1, &mask_of(&[1])).unwrap();
        assert!((d - 1.0 / 3.0).abs() < 1e-15);
        // isolated node
        let iso = Graph::from_edges(2, []).unwrap();
        assert_eq!(label_distribution(&iso, 0, 0, &none).unwrap(), 0.0);
    }

    #[test]
    fn mass_distribution_examples() {
        let edge = Graph::from_edges(2, [(0, 1)]).unwrap();
        let m = mass_distribution(&edge, 0, 0.5, 2.0, &SplitMask::empty()).unwrap();
        assert_eq!(m.support, vec![(0, 0.5), (1, 0.5)]);

        let star = Graph::from_edges(5, (1..5).map(|i| (0, i))).unwrap();
        let m = mass_distribution(&star, 0, 0.5, 2.0, &SplitMask::empty()).unwrap();
        for leaf in 1..5 {
            assert!((m.mass_of(leaf) - 0.125).abs() < 1e-15);
        }

        let labeled = path3().with_labels(vec![Some(0); 3], 1).unwrap();
        let m = mass_distribution(&labeled, 1, 0.5, 2.0, &mask_of(&[0, 1, 2])).unwrap();
        assert_eq!(m.mass_of(1), 0.5);
        assert!((m.mass_of(0) - 0.25).abs() < 1e-15);
        assert!((m.mass_of(2) - 0.25).abs() < 1e-15);

        let iso = Graph::from_edges(2, []).unwrap();
        assert!(matches!(
            mass_distribution(&iso, 0, 0.5, 2.0, &SplitMask::empty()),
            Err(Error::IsolatedNode(0))
        ));
    }

    #[test]
    fn label_aware_weights_favor_unlabeled_neighbor() {
        // node 1 has neighbors 0 (labeled, its neighborhood all class 0) and 2 (unlabeled)
        let g = path3()
            .with_labels(vec![Some(0), Some(0), None], 1)
            .unwrap();
        let m = mass_distribution(&g, 1, 0.5, 2.0, &mask_of(&[0, 1])).unwrap();
        // weights e^{-1} and e^{0}
        let e = std::f64::consts::E;
        assert!((m.mass_of(0) - 0.5 / (1.0 + e)).abs() < 1e-15);
        assert!((m.mass_of(2) - 0.5 * e / (1.0 + e)).abs() < 1e-15);
        assert!((m.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn wasserstein_examples() {
        let g = path3();
        let hop = |a: usize, b: usize| shortest_path_lengths(&g, a, 10).unwrap()[b] as f64;
        let ma = MassDistribution {
            owner: 0,
            support: vec![(0, 1.0)],
        };
        let mc = MassDistribution {
            owner: 2,
            support: vec![(2, 1.0)],
        };
        assert_eq!(wasserstein(&ma, &ma, hop).unwrap(), 0.0);
        assert_eq!(wasserstein(&ma, &mc, hop).unwrap(), 2.0);

        let none = SplitMask::empty();
        let m0 = mass_distribution(&g, 0, 0.5, 2.0, &none).unwrap();
        let m1 = mass_distribution(&g, 1, 0.5, 2.0, &none).unwrap();
        assert!((wasserstein(&m0, &m1, hop).unwrap() - 0.5).abs() < 1e-12);

        let split = Graph::from_edges(3, [(0, 1)]).unwrap();
        let far = |a: usize, b: usize| {
            let d = shortest_path_lengths(&split, a, 10).unwrap()[b];
            if d == crate::graph::UNREACHABLE {
                f64::INFINITY
            } else {
                d as f64
            }
        };
        assert!(matches!(
            wasserstein(&ma, &mc, far),
            Err(Error::InfiniteGroundDistance(0, 2))
        ));
    }

    #[test]
    fn ricci_examples() {
        let cfg = CurvatureConfig::default();
        let none = SplitMask::empty();
        let edge = Graph::from_edges(2, [(0, 1)]).unwrap();
        assert!((class_aware_ricci(&edge, (0, 1), &cfg, &none).unwrap() - 1.0).abs() < 1e-12);
        let k = class_aware_ricci(&path3(), (0, 1), &cfg, &none).unwrap();
        assert!((k - 0.5).abs() < 1e-12);
        let k_rev = class_aware_ricci(&path3(), (1, 0), &cfg, &none).unwrap();
        assert_eq!(k, k_rev);
        assert!(matches!(
            class_aware_ricci(&path3(), (0, 2), &cfg, &none),
            Err(Error::NotAnEdge(0, 2))
        ));
        let literal = CurvatureConfig {
            kappa: KappaForm::Literal,
            ..cfg
        };
        let w = class_aware_ricci(&path3(), (0, 1), &literal, &none).unwrap();
        assert!((w - 0.5).abs() < 1e-12);
    }

    #[test]
    fn complete_graph_edges_beat_tree_edges() {
        let mut e = Vec::new();
        for u in 0..4 {
            for v in u + 1..4 {
                e.push((u, v));
            }
        }
        let k4 = Graph::from_edges(4, e).unwrap();
        let tree = Graph::from_edges(7, [(0, 1), (0, 2), (1, 3), (1, 4), (2, 5), (2, 6)]).unwrap();
        let cfg = CurvatureConfig::default();
        let none = SplitMask::empty();
        let tk = curvature_table(&k4, &cfg, &none).unwrap();
        let tt = curvature_table(&tree, &cfg, &none).unwrap();
        let min_k4 = tk.values().iter().copied().fold(f64::INFINITY, f64::min);
        let max_tree = tt
            .values()
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(min_k4 > max_tree, "{min_k4} vs {max_tree}");
    }

    #[test]
    fn table_csv_round_trip() {
        let g = path3();
        let t = curvature_table(&g, &CurvatureConfig::default(), &SplitMask::empty()).unwrap();
        assert_eq!(t.len(), g.edge_count());
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("k.csv");
        t.write_csv(&p).unwrap();
        assert_eq!(EdgeCurvatureTable::read_csv(&p, &g).unwrap(), t);
        assert!(matches!(
            EdgeCurvatureTable::from_rows(&g, &[(0, 1, 0.5)]),
            Err(Error::MissingEdge(1, 2))
        ));
    }

    #[test]
    fn embedding_ground_metric_requires_embedding() {
        let cfg = CurvatureConfig {
            ground: GroundMetric::Embedding,
            ..CurvatureConfig::default()
        };
        let g = path3();
        assert!(class_aware_ricci(&g, (0, 1), &cfg, &SplitMask::empty()).is_err());
        let emb =
            PoincareEmbedding::from_points(vec![0.0, 0.0, 0.3, 0.0, 0.5, 0.1], 2, 1.0).unwrap();
        let rc = RicciCurvature::new(&g, &SplitMask::empty(), cfg)
            .unwrap()
            .with_embedding(&emb)
            .unwrap();
        let k = rc.edge(0, 1).unwrap();
        assert!(k.is_finite() && k <= 1.0);
    }
}
