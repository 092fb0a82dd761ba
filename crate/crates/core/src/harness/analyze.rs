use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::write_atomic;
use crate::error::{Error, Result};
use crate::graph::{
    clustering_by_degree, edge_homophily, mean_neighbor_degree, neighbor_correlation,
    CorrelationPoint, Graph, Quantity,
};
use crate::stats::{fit_power_law, loglog_slope, spearman, PowerLawFit};

/// Topology statistics of one graph.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisSummary {
    pub nodes: usize,
    pub edges: usize,
    pub degree_histogram: BTreeMap<usize, usize>,
    pub clustering: BTreeMap<usize, f64>,
    /// Log-log slope of `C(k)` over degrees with nonzero clustering.
    pub clustering_slope: Option<f64>,
    pub degree_correlation: Vec<CorrelationPoint>,
    /// Spearman correlation between `k` and `⟨k_nn⟩(k)` over degree values.
    pub degree_correlation_spearman: Option<f64>,
    /// Spearman correlation between each node's degree and its neighbors'
    /// mean degree; unlike the per-value statistic, every node counts once.
    pub node_degree_correlation_spearman: Option<f64>,
    pub betweenness_correlation: Vec<CorrelationPoint>,
    pub homophily: Option<f64>,
    pub degree_power_law: Option<PowerLawFit>,
}

#[derive(Serialize, Deserialize)]
struct SummaryJson {
    nodes: usize,
    edges: usize,
    clustering_slope: Option<f64>,
    degree_correlation_spearman: Option<f64>,
    node_degree_correlation_spearman: Option<f64>,
    homophily: Option<f64>,
    power_law_alpha: Option<f64>,
    power_law_x_min: Option<usize>,
}

/// Computes every statistic; homophily only when all nodes are labeled.
pub fn analyze(g: &Graph) -> Result<AnalysisSummary> {
    if g.edge_count() == 0 {
        return Err(Error::EmptyEdgeSet);
    }
    let degrees = g.degrees();
    let mut degree_histogram = BTreeMap::new();
    for &d in &degrees {
        *degree_histogram.entry(d).or_insert(0) += 1;
    }
    let clustering = clustering_by_degree(g);
    let pts: Vec<(f64, f64)> = clustering.iter().map(|(&k, &c)| (k as f64, c)).collect();
    let degree_correlation = neighbor_correlation(g, Quantity::Connectivity)?;
    let ks: Vec<f64> = degree_correlation.iter().map(|p| p.value).collect();
    let knn: Vec<f64> = degree_correlation.iter().map(|p| p.mean_neighbor).collect();
    let homophily = if g.labels().iter().all(Option::is_some) {
        Some(edge_homophily(g)?)
    } else {
        None
    };
    Ok(AnalysisSummary {
        nodes: g.node_count(),
        edges: g.edge_count(),
        degree_histogram,
        clustering_slope: loglog_slope(&pts),
        clustering,
        degree_correlation_spearman: spearman(&ks, &knn),
        node_degree_correlation_spearman: node_degree_spearman(g),
        degree_correlation,
        betweenness_correlation: neighbor_correlation(g, Quantity::Betweenness)?,
        homophily,
        degree_power_law: fit_power_law(&degrees, 50),
    })
}

fn node_degree_spearman(g: &Graph) -> Option<f64> {
    let (k, knn): (Vec<f64>, Vec<f64>) = mean_neighbor_degree(g)
        .into_iter()
        .enumerate()
        .filter_map(|(v, m)| m.map(|m| (g.neighbors(v).len() as f64, m)))
        .unzip();
    spearman(&k, &knn)
}

fn correlation_csv(header: &str, rows: &[CorrelationPoint]) -> String {
    let mut s = format!("{header},mean_neighbor,nodes\n");
    for p in rows {
        s.push_str(&format!("{},{},{}\n", p.value, p.mean_neighbor, p.nodes));
    }
    s
}

/// Writes `clustering_by_degree.csv`, `degree_correlation.csv`,
/// `betweenness_correlation.csv`, `degree_histogram.csv` and `summary.json`.
pub fn write_analysis(dir: &Path, a: &AnalysisSummary) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut c = String::from("degree,clustering\n");
    for (k, v) in &a.clustering {
        c.push_str(&format!("{k},{v}\n"));
    }
    write_atomic(&dir.join("clustering_by_degree.csv"), c.as_bytes())?;
    write_atomic(
        &dir.join("degree_correlation.csv"),
        correlation_csv("degree", &a.degree_correlation).as_bytes(),
    )?;
    write_atomic(
        &dir.join("betweenness_correlation.csv"),
        correlation_csv("betweenness", &a.betweenness_correlation).as_bytes(),
    )?;
    let mut h = String::from("degree,count\n");
    for (k, n) in &a.degree_histogram {
        h.push_str(&format!("{k},{n}\n"));
    }
    write_atomic(&dir.join("degree_histogram.csv"), h.as_bytes())?;
    let summary = SummaryJson {
        nodes: a.nodes,
        edges: a.edges,
        clustering_slope: a.clustering_slope,
        degree_correlation_spearman: a.degree_correlation_spearman,
        node_degree_correlation_spearman: a.node_degree_correlation_spearman,
        homophily: a.homophily,
        power_law_alpha: a.degree_power_law.map(|f| f.alpha),
        power_law_x_min: a.degree_power_law.map(|f| f.x_min),
    };
    write_atomic(
        &dir.join("summary.json"),
        &serde_json::to_vec_pretty(&summary)?,
    )
}
