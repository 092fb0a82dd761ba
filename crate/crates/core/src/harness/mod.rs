//! Experiment orchestration: dataset preparation, per-seed pipelines
//! (embed, curvature, train), aggregated reports, topology analyses and plots.

mod analyze;
pub mod metrics;
mod plot;
mod splits;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use analyze::{analyze, write_analysis, AnalysisSummary};
pub use metrics::{micro_f1, weighted_f1};
pub use plot::disk_svg;
pub use splits::{
    make_balanced_split, make_hierarchy_split, norm_quintiles, Band, HierarchySplit, SetSize,
    SplitSpec,
};

use crate::curvature::{CurvatureConfig, GroundMetric, RicciCurvature};
use crate::error::{Error, Result};
use crate::generators::{hnm_three_community, HnmAnnotation};
use crate::graph::io::load_dataset;
use crate::graph::{edge_homophily, Features, Graph};
use crate::hyperbolic::{embed_train, EmbedConfig};
use crate::model::{train, Ablation, ModelConfig};
use crate::stats::{mean, std_dev};

/// Where the graph comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DatasetSpec {
    /// CSV or Planetoid directory.
    Dir { path: PathBuf },
    /// Three-community hierarchical network generated in memory.
    Hnm3 { iterations: usize },
}

/// Declarative description of a multi-seed run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    #[serde(default)]
    pub split: SplitSpec,
    #[serde(default)]
    pub embedding: EmbedConfig,
    #[serde(default)]
    pub curvature: CurvatureConfig,
    #[serde(default)]
    pub model: ModelConfig,
    /// Variants trained on the same split, embedding and curvature per seed.
    #[serde(default = "default_ablations")]
    pub ablations: Vec<Ablation>,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn default_ablations() -> Vec<Ablation> {
    vec![Ablation::None]
}

impl ExperimentConfig {
    pub fn new(dataset: DatasetSpec) -> Self {
        ExperimentConfig {
            dataset,
            split: SplitSpec::default(),
            embedding: EmbedConfig::default(),
            curvature: CurvatureConfig::default(),
            model: ModelConfig::default(),
            ablations: default_ablations(),
            seeds: vec![0, 1, 2, 3, 4],
            output_dir: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::InvalidArgument("seeds must not be empty".into()));
        }
        if self.ablations.is_empty() {
            return Err(Error::InvalidArgument("ablations must not be empty".into()));
        }
        if self.split.per_class == Some(0) {
            return Err(Error::InvalidArgument(
                "per-class label count must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Mean and sample standard deviation over successful seeds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

impl Aggregate {
    pub fn of(xs: &[f64]) -> Self {
        Aggregate {
            mean: mean(xs),
            std: std_dev(xs),
            count: xs.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedMetrics {
    pub weighted_f1: f64,
    pub micro_f1: f64,
    pub train_size: usize,
    pub val_size: usize,
    pub test_size: usize,
    /// Share of training nodes taken from outside the requested band.
    pub top_up_fraction: Option<f64>,
    pub best_epoch: usize,
    pub losses: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum SeedStatus {
    Ok(SeedMetrics),
    Failed { error: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedOutcome {
    pub seed: u64,
    #[serde(flatten)]
    pub status: SeedStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantReport {
    pub ablation: Ablation,
    pub seeds: Vec<SeedOutcome>,
    pub weighted_f1: Aggregate,
    pub micro_f1: Aggregate,
}

impl VariantReport {
    fn from_seeds(ablation: Ablation, seeds: Vec<SeedOutcome>) -> Self {
        let ok: Vec<&SeedMetrics> = seeds
            .iter()
            .filter_map(|s| match &s.status {
                SeedStatus::Ok(m) => Some(m),
                SeedStatus::Failed { .. } => None,
            })
            .collect();
        let w: Vec<f64> = ok.iter().map(|m| m.weighted_f1).collect();
        let mi: Vec<f64> = ok.iter().map(|m| m.micro_f1).collect();
        VariantReport {
            ablation,
            weighted_f1: Aggregate::of(&w),
            micro_f1: Aggregate::of(&mi),
            seeds,
        }
    }

    pub fn failures(&self) -> usize {
        self.seeds
            .iter()
            .filter(|s| matches!(s.status, SeedStatus::Failed { .. }))
            .count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub name: String,
    pub nodes: usize,
    pub edges: usize,
    pub classes: usize,
    pub homophily: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub dataset: DatasetSummary,
    pub variants: Vec<VariantReport>,
    pub wall_clock_secs: f64,
}

impl RunReport {
    pub fn variant(&self, ablation: Ablation) -> Option<&VariantReport> {
        self.variants.iter().find(|v| v.ablation == ablation)
    }

    pub fn all_succeeded(&self) -> bool {
        self.variants.iter().all(|v| v.failures() == 0)
    }

    /// Flat per-seed table: `variant,seed,status,weighted_f1,micro_f1,top_up_fraction`.
    pub fn metrics_csv(&self) -> String {
        let mut out = String::from("variant,seed,status,weighted_f1,micro_f1,top_up_fraction\n");
        for v in &self.variants {
            let name = serde_json::to_value(v.ablation)
                .ok()
                .and_then(|x| x.as_str().map(str::to_string))
                .unwrap_or_default();
            for s in &v.seeds {
                match &s.status {
                    SeedStatus::Ok(m) => out.push_str(&format!(
                        "{name},{},ok,{},{},{}\n",
                        s.seed,
                        m.weighted_f1,
                        m.micro_f1,
                        m.top_up_fraction.map_or(String::new(), |f| f.to_string())
                    )),
                    SeedStatus::Failed { .. } => {
                        out.push_str(&format!("{name},{},failed,,,\n", s.seed))
                    }
                }
            }
        }
        out
    }

    /// Writes `report.json` and `metrics.csv` into `dir`, each through a
    /// temporary file and a rename.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_atomic(&dir.join("report.json"), &serde_json::to_vec_pretty(self)?)?;
        write_atomic(&dir.join("metrics.csv"), self.metrics_csv().as_bytes())
    }
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
        f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// A graph ready for training: features present (identity when the source
/// has none) and optional hierarchy annotations.
#[derive(Debug, Clone)]
pub struct PreparedDataset {
    pub name: String,
    pub graph: Graph,
    pub annotation: Option<HnmAnnotation>,
}

pub fn prepare_dataset(spec: &DatasetSpec) -> Result<PreparedDataset> {
    let (name, graph, annotation) = match spec {
        DatasetSpec::Dir { path } => {
            let d = load_dataset(path)?;
            (d.name, d.graph, d.annotations)
        }
        DatasetSpec::Hnm3 { iterations } => {
            let h = hnm_three_community(*iterations)?;
            (format!("hnm3-{iterations}"), h.graph, Some(h.annotation))
        }
    };
    let graph = if graph.features().is_some() {
        graph
    } else {
        let n = graph.node_count();
        graph.with_features(Features::identity(n))?
    };
    Ok(PreparedDataset {
        name,
        graph,
        annotation,
    })
}

fn run_seed(
    data: &PreparedDataset,
    config: &ExperimentConfig,
    seed: u64,
) -> Result<Vec<SeedMetrics>> {
    let g = &data.graph;
    let needs_embedding = config.ablations.iter().any(|a| a.uses_margin())
        || config.curvature.ground == GroundMetric::Embedding
        || matches!(config.split.band, Some(Band::Quintile(_)));
    let embedding = if needs_embedding {
        let ec = EmbedConfig {
            seed,
            ..config.embedding.clone()
        };
        Some(embed_train(g, &ec)?)
    } else {
        None
    };
    let norms = embedding.as_ref().map(|e| e.norms());

    let (mask, top_up) = match config.split.band {
        None => (make_balanced_split(g, &config.split, seed)?, None),
        Some(band) => {
            let s = make_hierarchy_split(
                g,
                band,
                data.annotation.as_ref(),
                norms,
                &config.split,
                seed,
            )?;
            (s.mask, Some(s.top_up_fraction))
        }
    };

    let table = if config.ablations.iter().any(|a| a.uses_curvature()) {
        let mut rc = RicciCurvature::new(g, &mask, config.curvature.clone())?;
        if let Some(e) = &embedding {
            rc = rc.with_embedding(e)?;
        }
        Some(rc.table()?)
    } else {
        None
    };

    let mut out = Vec::with_capacity(config.ablations.len());
    for &ablation in &config.ablations {
        let mc = ModelConfig {
            ablation,
            seed,
            ..config.model.clone()
        };
        let (model, outcome) = train(g, &mask, norms, table.as_ref(), &mc)?;
        let pred = model.forward(&outcome.params).predictions();
        let classes = g.num_classes();
        out.push(SeedMetrics {
            weighted_f1: weighted_f1(&pred, g.labels(), &mask.test, classes)?,
            micro_f1: micro_f1(&pred, g.labels(), &mask.test, classes)?,
            train_size: mask.train.len(),
            val_size: mask.val.len(),
            test_size: mask.test.len(),
            top_up_fraction: top_up,
            best_epoch: outcome.best_epoch,
            losses: outcome.losses(),
        });
    }
    Ok(out)
}

/// Runs every seed (in parallel; each seed is itself deterministic) and
/// aggregates per variant. A failing seed is recorded and does not stop the others.
pub fn run_prepared(data: &PreparedDataset, config: &ExperimentConfig) -> Result<RunReport> {
    config.validate()?;
    let start = Instant::now();
    let results: Vec<(u64, Result<Vec<SeedMetrics>>)> = config
        .seeds
        .par_iter()
        .map(|&seed| (seed, run_seed(data, config, seed)))
        .collect();
    let variants = config
        .ablations
        .iter()
        .enumerate()
        .map(|(k, &ablation)| {
            let seeds = results
                .iter()
                .map(|(seed, r)| SeedOutcome {
                    seed: *seed,
                    status: match r {
                        Ok(ms) => SeedStatus::Ok(ms[k].clone()),
                        Err(e) => SeedStatus::Failed {
                            error: e.to_string(),
                        },
                    },
                })
                .collect();
            VariantReport::from_seeds(ablation, seeds)
        })
        .collect();
    let g = &data.graph;
    let homophily = if g.labels().iter().all(Option::is_some) && g.edge_count() > 0 {
        edge_homophily(g).ok()
    } else {
        None
    };
    Ok(RunReport {
        config: config.clone(),
        dataset: DatasetSummary {
            name: data.name.clone(),
            nodes: g.node_count(),
            edges: g.edge_count(),
            classes: g.num_classes(),
            homophily,
        },
        variants,
        wall_clock_secs: start.elapsed().as_secs_f64(),
    })
}

/// Loads the dataset, runs every seed and writes the report when an output
/// directory is configured.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunReport> {
    let data = prepare_dataset(&config.dataset)?;
    let report = run_prepared(&data, config)?;
    if let Some(dir) = &config.output_dir {
        report.write(dir)?;
    }
    Ok(report)
}
