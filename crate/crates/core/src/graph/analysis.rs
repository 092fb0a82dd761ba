use std::collections::{BTreeMap, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Graph;
use crate::error::{Error, Result};

/// Hop distance for nodes that are unreachable or beyond the cap.
pub const UNREACHABLE: usize = usize::MAX;

/// Hop distances from `source`; nodes farther than `cap` hops get [`UNREACHABLE`].
pub fn shortest_path_lengths(g: &Graph, source: usize, cap: usize) -> Result<Vec<usize>> {
    g.check_node(source)?;
    let mut dist = vec![UNREACHABLE; g.node_count()];
    dist[source] = 0;
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        if dist[u] == cap {
            continue;
        }
        for &w in g.neighbors(u) {
            if dist[w] == UNREACHABLE {
                dist[w] = dist[u] + 1;
                queue.push_back(w);
            }
        }
    }
    Ok(dist)
}

/// Local clustering coefficient per node; nodes of degree < 2 get 0.
pub fn local_clustering(g: &Graph) -> Vec<f64> {
    (0..g.node_count())
        .map(|v| {
            let nb = g.neighbors(v);
            let k = nb.len();
            if k < 2 {
                return 0.0;
            }
            let mut links = 0usize;
            for (i, &a) in nb.iter().enumerate() {
                // both lists are sorted, so count the overlap of N(a) with the tail of N(v)
                let tail = &nb[i + 1..];
                let na = g.neighbors(a);
                let (mut p, mut q) = (0, 0);
                while p < na.len() && q < tail.len() {
                    match na[p].cmp(&tail[q]) {
                        std::cmp::Ordering::Less => p += 1,
                        std::cmp::Ordering::Greater => q += 1,
                        std::cmp::Ordering::Equal => {
                            links += 1;
                            p += 1;
                            q += 1;
                        }
                    }
                }
            }
            2.0 * links as f64 / (k * (k - 1)) as f64
        })
        .collect()
}

/// Mean local clustering coefficient C(k) for every degree k present.
/// Degree-0 and degree-1 entries are 0 by definition.
pub fn clustering_by_degree(g: &Graph) -> BTreeMap<usize, f64> {
    let cc = local_clustering(g);
    let mut acc: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for (v, c) in cc.into_iter().enumerate() {
        let e = acc.entry(g.deg(v)).or_insert((0.0, 0));
        e.0 += c;
        e.1 += 1;
    }
    acc.into_iter()
        .map(|(k, (sum, count))| (k, sum / count as f64))
        .collect()
}

const BRANDES_CHUNKS: usize = 64;

/// Unnormalized shortest-path betweenness (Brandes), each unordered pair
/// counted once. Disconnected graphs are handled per component.
///
/// Sources are split into a fixed number of chunks whose partial sums are
/// added in chunk order, so the result does not depend on the thread count.
pub fn betweenness(g: &Graph) -> Vec<f64> {
    let n = g.node_count();
    if n == 0 {
        return Vec::new();
    }
    let chunk = n.div_ceil(BRANDES_CHUNKS).max(1);
    let partials: Vec<Vec<f64>> = (0..n)
        .collect::<Vec<_>>()
        .par_chunks(chunk)
        .map(|sources| {
            let mut acc = vec![0.0; n];
            let mut ws = BrandesWorkspace::new(n);
            for &s in sources {
                ws.accumulate(g, s, &mut acc);
            }
            acc
        })
        .collect();
    let mut total = vec![0.0; n];
    for p in partials {
        for (t, x) in total.iter_mut().zip(p) {
            *t += x;
        }
    }
    for t in &mut total {
        *t /= 2.0;
    }
    total
}

struct BrandesWorkspace {
    stack: Vec<usize>,
    preds: Vec<Vec<usize>>,
    sigma: Vec<f64>,
    dist: Vec<usize>,
    delta: Vec<f64>,
    queue: VecDeque<usize>,
}

impl BrandesWorkspace {
    fn new(n: usize) -> Self {
        BrandesWorkspace {
            stack: Vec::with_capacity(n),
            preds: vec![Vec::new(); n],
            sigma: vec![0.0; n],
            dist: vec![UNREACHABLE; n],
            delta: vec![0.0; n],
            queue: VecDeque::with_capacity(n),
        }
    }

    fn accumulate(&mut self, g: &Graph, s: usize, acc: &mut [f64]) {
        self.sigma[s] = 1.0;
        self.dist[s] = 0;
        self.queue.push_back(s);
        while let Some(v) = self.queue.pop_front() {
            self.stack.push(v);
            for &w in g.neighbors(v) {
                if self.dist[w] == UNREACHABLE {
                    self.dist[w] = self.dist[v] + 1;
                    self.queue.push_back(w);
                }
                if self.dist[w] == self.dist[v] + 1 {
                    self.sigma[w] += self.sigma[v];
                    self.preds[w].push(v);
                }
            }
        }
        while let Some(w) = self.stack.pop() {
            for &v in &self.preds[w] {
                self.delta[v] += self.sigma[v] / self.sigma[w] * (1.0 + self.delta[w]);
            }
            if w != s {
                acc[w] += self.delta[w];
            }
            // reset for the next source
            self.preds[w].clear();
            self.sigma[w] = 0.0;
            self.dist[w] = UNREACHABLE;
            self.delta[w] = 0.0;
        }
    }
}

/// Per-node quantity conditioned on in [`neighbor_correlation`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quantity {
    Connectivity,
    Betweenness,
}

/// One row of a nearest-neighbor correlation table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationPoint {
    /// Degree, or the geometric center of a betweenness bin (0 for b = 0).
    pub value: f64,
    /// Mean quantity over all neighbors of all nodes with this value.
    pub mean_neighbor: f64,
    /// Number of nodes with this value.
    pub nodes: usize,
}

const BINS_PER_DECADE: f64 = 10.0;

/// Average nearest-neighbor connectivity ⟨k_nn⟩(k) or betweenness ⟨b_nn⟩(b).
///
/// Degrees are exact keys. Betweenness is continuous and is grouped into
/// logarithmic bins, ten per decade; zero betweenness forms its own bin.
/// Isolated nodes have no neighbors and are skipped.
pub fn neighbor_correlation(g: &Graph, quantity: Quantity) -> Result<Vec<CorrelationPoint>> {
    if g.edge_count() == 0 {
        return Err(Error::EmptyEdgeSet);
    }
    let values: Vec<f64> = match quantity {
        Quantity::Connectivity => g.degrees().into_iter().map(|d| d as f64).collect(),
        Quantity::Betweenness => betweenness(g),
    };
    // key -> (sum of neighbor values, neighbor count, node count, bin center)
    let mut groups: BTreeMap<i64, (f64, usize, usize, f64)> = BTreeMap::new();
    for v in 0..g.node_count() {
        let nb = g.neighbors(v);
        if nb.is_empty() {
            continue;
        }
        let (key, center) = match quantity {
            Quantity::Connectivity => (nb.len() as i64, nb.len() as f64),
            Quantity::Betweenness => betweenness_bin(values[v]),
        };
        let e = groups.entry(key).or_insert((0.0, 0, 0, center));
        e.0 += nb.iter().map(|&w| values[w]).sum::<f64>();
        e.1 += nb.len();
        e.2 += 1;
    }
    Ok(groups
        .into_values()
        .map(|(sum, count, nodes, value)| CorrelationPoint {
            value,
            mean_neighbor: sum / count as f64,
            nodes,
        })
        .collect())
}

/// Mean degree of each node's neighbors; `None` for isolated nodes.
pub fn mean_neighbor_degree(g: &Graph) -> Vec<Option<f64>> {
    (0..g.node_count())
        .map(|v| {
            let nb = g.neighbors(v);
            (!nb.is_empty())
                .then(|| nb.iter().map(|&w| g.deg(w) as f64).sum::<f64>() / nb.len() as f64)
        })
        .collect()
}

fn betweenness_bin(b: f64) -> (i64, f64) {
    if b <= 0.0 {
        return (i64::MIN, 0.0);
    }
    let idx = (b.log10() * BINS_PER_DECADE).floor();
    (idx as i64, 10f64.powf((idx + 0.5) / BINS_PER_DECADE))
}

/// Fraction of edges whose endpoints share a label. Every node must be labeled.
pub fn edge_homophily(g: &Graph) -> Result<f64> {
    if let Some(v) = (0..g.node_count()).find(|&v| g.label(v).is_none()) {
        return Err(Error::Unlabeled(v));
    }
    if g.edge_count() == 0 {
        return Err(Error::EmptyEdgeSet);
    }
    let same = g
        .edges()
        .iter()
        .filter(|&&(u, v)| g.label(u) == g.label(v))
        .count();
    Ok(same as f64 / g.edge_count() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(n: usize) -> Graph {
        Graph::from_edges(n, (1..n).map(|i| (i - 1, i))).unwrap()
    }

    fn complete(n: usize) -> Graph {
        let mut e = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                e.push((u, v));
            }
        }
        Graph::from_edges(n, e).unwrap()
    }

    fn star(leaves: usize) -> Graph {
        Graph::from_edges(leaves + 1, (1..=leaves).map(|i| (0, i))).unwrap()
    }

    #[test]
    fn clustering_examples() {
        assert_eq!(clustering_by_degree(&complete(4)).get(&3), Some(&1.0));
        assert_eq!(clustering_by_degree(&path(3)).get(&2), Some(&0.0));
    }

    #[test]
    fn betweenness_examples() {
        assert_eq!(betweenness(&star(4))[0], 6.0);
        assert!(betweenness(&complete(5)).iter().all(|&b| b == 0.0));
        assert_eq!(betweenness(&path(3)), vec![0.0, 1.0, 0.0]);
        // two components: a P3 and an isolated edge
        let g = Graph::from_edges(5, [(0, 1), (1, 2), (3, 4)]).unwrap();
        assert_eq!(betweenness(&g), vec![0.0, 1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn connectivity_correlation_examples() {
        let pts = neighbor_correlation(&star(5), Quantity::Connectivity).unwrap();
        assert_eq!(pts.len(), 2);
        assert_eq!((pts[0].value, pts[0].mean_neighbor), (1.0, 5.0));
        assert_eq!((pts[1].value, pts[1].mean_neighbor), (5.0, 1.0));

        // cycle is 2-regular
        let cycle = Graph::from_edges(6, (0..6).map(|i| (i, (i + 1) % 6))).unwrap();
        let pts = neighbor_correlation(&cycle, Quantity::Connectivity).unwrap();
        assert_eq!(pts.len(), 1);
        assert_eq!(pts[0].mean_neighbor, 2.0);

        let empty = Graph::from_edges(3, []).unwrap();
        assert!(matches!(
            neighbor_correlation(&empty, Quantity::Connectivity),
            Err(Error::EmptyEdgeSet)
        ));
    }

    #[test]
    fn betweenness_correlation_bins() {
        let pts = neighbor_correlation(&star(4), Quantity::Betweenness).unwrap();
        // leaves have b = 0, hub has b = 6
        assert_eq!(pts[0].value, 0.0);
        assert_eq!(pts[0].mean_neighbor, 6.0);
        assert_eq!(pts[0].nodes, 4);
        assert!((pts[1].value - 6.0).abs() < 0.7);
        assert_eq!(pts[1].mean_neighbor, 0.0);
    }

    #[test]
    fn homophily_examples() {
        let g = complete(4).with_labels(vec![Some(1); 4], 2).unwrap();
        assert_eq!(edge_homophily(&g).unwrap(), 1.0);
        // K_{2,2} labeled by side
        let b = Graph::from_edges(4, [(0, 2), (0, 3), (1, 2), (1, 3)])
            .unwrap()
            .with_labels(vec![Some(0), Some(0), Some(1), Some(1)], 2)
            .unwrap();
        assert_eq!(edge_homophily(&b).unwrap(), 0.0);
        let partial = path(3)
            .with_labels(vec![Some(0), None, Some(0)], 1)
            .unwrap();
        assert!(matches!(edge_homophily(&partial), Err(Error::Unlabeled(1))));
    }

    #[test]
    fn bfs_examples() {
        let g = Graph::from_edges(4, [(0, 1), (1, 2)]).unwrap();
        let d = shortest_path_lengths(&g, 0, 10).unwrap();
        assert_eq!(d, vec![0, 1, 2, UNREACHABLE]);
        let capped = shortest_path_lengths(&g, 0, 1).unwrap();
        assert_eq!(capped, vec![0, 1, UNREACHABLE, UNREACHABLE]);
        assert!(shortest_path_lengths(&g, 4, 1).is_err());
    }
}
