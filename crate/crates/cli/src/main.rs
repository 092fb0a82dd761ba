use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use hierlab_core::curvature::{CurvatureConfig, EdgeCurvatureTable, KappaForm, RicciCurvature};
use hierlab_core::generators::{ba_generate, hnm_generate, hnm_three_community};
use hierlab_core::graph::io::{load_dataset, write_csv_dataset};
use hierlab_core::harness::{
    analyze, disk_svg, make_balanced_split, micro_f1, prepare_dataset, run_experiment, weighted_f1,
    write_analysis, Aggregate, DatasetSpec, DatasetSummary, ExperimentConfig, RunReport,
    SeedMetrics, SeedOutcome, SeedStatus, SplitSpec, VariantReport,
};
use hierlab_core::hyperbolic::{embed_train, EmbedConfig, PoincareEmbedding};
use hierlab_core::model::{train, Ablation, MarginSign, ModelConfig};
use hierlab_core::{Graph, SplitMask};

#[derive(Parser)]
#[command(
    name = "hierlab",
    version,
    about = "Hierarchy-aware node classification toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum GraphModel {
    Hnm,
    Hnm3,
    Ba,
}

#[derive(Clone, Copy, ValueEnum)]
enum AblateArg {
    None,
    Ham,
    Hmpnn,
    Both,
}

impl From<AblateArg> for Ablation {
    fn from(a: AblateArg) -> Self {
        match a {
            AblateArg::None => Ablation::None,
            AblateArg::Ham => Ablation::Ham,
            AblateArg::Hmpnn => Ablation::Hmpnn,
            AblateArg::Both => Ablation::Both,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitKind {
    /// 10% train (balanced), 80% test, the rest validation.
    Fractional,
    /// 20 labels per class, 500 validation, 1000 test.
    Planetoid,
}

#[derive(Clone, Copy, ValueEnum)]
enum SignArg {
    Ldam,
    Literal,
}

/// Training split shared by `curvature` and `train`, so both see the same labels.
#[derive(clap::Args, Clone)]
struct SplitArgs {
    /// Seed of the balanced split.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "fractional")]
    split: SplitKind,
    /// Overrides the training labels per class of the chosen split.
    #[arg(long)]
    per_class: Option<usize>,
}

impl SplitArgs {
    fn spec(&self) -> SplitSpec {
        let base = match self.split {
            SplitKind::Fractional => SplitSpec::fractional(),
            SplitKind::Planetoid => SplitSpec::planetoid(),
        };
        SplitSpec {
            per_class: self.per_class.or(base.per_class),
            ..base
        }
    }

    fn mask(&self, g: &Graph) -> hierlab_core::Result<SplitMask> {
        make_balanced_split(g, &self.spec(), self.seed)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic graph as a CSV dataset directory.
    Generate {
        #[arg(long, value_enum)]
        model: GraphModel,
        #[arg(long, default_value_t = 5)]
        iterations: usize,
        /// Module size of the hierarchical model.
        #[arg(long, default_value_t = 4)]
        module: usize,
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        m: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a Poincaré embedding and write `node,x0,...,norm` rows.
    Embed {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 100)]
        epochs: usize,
        #[arg(long, default_value_t = 0.3)]
        lr: f64,
        #[arg(long, default_value_t = 10)]
        neg: usize,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        /// Leave a node out of its own negative pool.
        #[arg(long)]
        no_self_negative: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Draw a 2-D embedding inside the unit disk as SVG.
    PlotDisk {
        #[arg(long)]
        embedding: PathBuf,
        /// `node,label` CSV; points are gray when absent.
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Class-aware Ricci curvature of every edge, as `u,v,kappa` rows.
    Curvature {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        /// Store `W/d` instead of `1 - W/d`.
        #[arg(long)]
        kappa_literal: bool,
        #[command(flatten)]
        split: SplitArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one model on a balanced split and write a single-seed report.
    Train {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        embedding: Option<PathBuf>,
        #[arg(long)]
        curvature: Option<PathBuf>,
        #[arg(long, default_value_t = ModelConfig::default().alpha_margin)]
        alpha_margin: f64,
        #[arg(long, value_enum, default_value = "ldam")]
        margin_sign: SignArg,
        #[arg(long, default_value_t = 500)]
        epochs: usize,
        #[arg(long, value_enum, default_value = "none")]
        ablate: AblateArg,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[command(flatten)]
        split: SplitArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a multi-seed experiment described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output_dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Topology analyses: clustering, degree and betweenness correlations.
    Analyze {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match dispatch(Cli::parse().command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

/// `Ok(false)` when the command ran but some seed failed.
fn dispatch(command: Command) -> Result<bool> {
    match command {
        Command::Generate {
            model,
            iterations,
            module,
            n,
            m,
            seed,
            out,
        } => {
            let (graph, annotation) = match model {
                GraphModel::Hnm => {
                    let h = hnm_generate(module, iterations)?;
                    (h.graph, Some(h.annotation))
                }
                GraphModel::Hnm3 => {
                    let h = hnm_three_community(iterations)?;
                    (h.graph, Some(h.annotation))
                }
                GraphModel::Ba => (ba_generate(n, m, seed)?, None),
            };
            write_csv_dataset(&out, &graph, annotation.as_ref())?;
            log::info!(
                "wrote {} nodes and {} edges to {}",
                graph.node_count(),
                graph.edge_count(),
                out.display()
            );
        }
        Command::Embed {
            dataset,
            dim,
            epochs,
            lr,
            neg,
            c,
            no_self_negative,
            seed,
            out,
        } => {
            let g = load_dataset(&dataset)?.graph;
            let config = EmbedConfig {
                dim,
                epochs,
                lr,
                neg_samples: neg,
                curvature: c,
                self_negative: !no_self_negative,
                seed,
                ..EmbedConfig::default()
            };
            embed_train(&g, &config)?.write_csv(&out)?;
        }
        Command::PlotDisk {
            embedding,
            labels,
            c,
            out,
        } => {
            let e = PoincareEmbedding::read_csv(&embedding, c)?;
            let labels = labels.map(|p| read_labels(&p, e.len())).transpose()?;
            fs::write(&out, disk_svg(&e, labels.as_deref())?)
                .with_context(|| format!("writing {}", out.display()))?;
        }
        Command::Curvature {
            dataset,
            alpha,
            p,
            kappa_literal,
            split,
            out,
        } => {
            let g = load_dataset(&dataset)?.graph;
            let mask = if g.labels().iter().any(Option::is_some) {
                split.mask(&g)?
            } else {
                SplitMask::empty()
            };
            let config = CurvatureConfig {
                alpha,
                p,
                kappa: if kappa_literal {
                    KappaForm::Literal
                } else {
                    KappaForm::Standard
                },
                ..CurvatureConfig::default()
            };
            RicciCurvature::new(&g, &mask, config)?
                .table()?
                .write_csv(&out)?;
        }
        Command::Train {
            dataset,
            embedding,
            curvature,
            alpha_margin,
            margin_sign,
            epochs,
            ablate,
            c,
            split,
            out,
        } => {
            let report = train_once(TrainArgs {
                dataset,
                embedding,
                curvature,
                alpha_margin,
                margin_sign,
                epochs,
                ablation: ablate.into(),
                c,
                split,
            })?;
            write_json(&out, &report)?;
            return Ok(report.all_succeeded());
        }
        Command::Run { config, out } => {
            let mut cfg = ExperimentConfig::from_json_file(&config)?;
            if out.is_some() {
                cfg.output_dir = out;
            }
            let report = run_experiment(&cfg)?;
            for v in &report.variants {
                log::info!(
                    "{:?}: weighted-F1 {:.4} ± {:.4}, micro-F1 {:.4} ({} failed seeds)",
                    v.ablation,
                    v.weighted_f1.mean,
                    v.weighted_f1.std,
                    v.micro_f1.mean,
                    v.failures()
                );
            }
            if cfg.output_dir.is_none() {
                println!("{}", serde_json::to_string_pretty(&report)?);
            }
            return Ok(report.all_succeeded());
        }
        Command::Analyze { dataset, out } => {
            let g = load_dataset(&dataset)?.graph;
            write_analysis(&out, &analyze(&g)?)?;
        }
    }
    Ok(true)
}

struct TrainArgs {
    dataset: PathBuf,
    embedding: Option<PathBuf>,
    curvature: Option<PathBuf>,
    alpha_margin: f64,
    margin_sign: SignArg,
    epochs: usize,
    ablation: Ablation,
    c: f64,
    split: SplitArgs,
}

fn train_once(args: TrainArgs) -> Result<RunReport> {
    let spec = DatasetSpec::Dir {
        path: args.dataset.clone(),
    };
    let data = prepare_dataset(&spec)?;
    let g = &data.graph;
    let embedding = match (&args.embedding, args.ablation.uses_margin()) {
        (Some(p), _) => Some(PoincareEmbedding::read_csv(p, args.c)?),
        (None, true) => bail!("--embedding is required unless the margin is ablated"),
        (None, false) => None,
    };
    let table = match (&args.curvature, args.ablation.uses_curvature()) {
        (Some(p), _) => Some(EdgeCurvatureTable::read_csv(p, g)?),
        (None, true) => bail!("--curvature is required unless curvature weighting is ablated"),
        (None, false) => None,
    };
    let model = ModelConfig {
        epochs: args.epochs,
        alpha_margin: args.alpha_margin,
        margin_sign: match args.margin_sign {
            SignArg::Ldam => MarginSign::Ldam,
            SignArg::Literal => MarginSign::Literal,
        },
        ablation: args.ablation,
        seed: args.split.seed,
        ..ModelConfig::default()
    };
    let mut config = ExperimentConfig::new(spec);
    config.split = args.split.spec();
    config.model = model.clone();
    config.ablations = vec![args.ablation];
    config.seeds = vec![args.split.seed];

    let status = (|| -> hierlab_core::Result<SeedMetrics> {
        let mask = args.split.mask(g)?;
        let norms = embedding.as_ref().map(|e| e.norms());
        let (m, outcome) = train(g, &mask, norms, table.as_ref(), &model)?;
        let pred = m.forward(&outcome.params).predictions();
        let k = g.num_classes();
        Ok(SeedMetrics {
            weighted_f1: weighted_f1(&pred, g.labels(), &mask.test, k)?,
            micro_f1: micro_f1(&pred, g.labels(), &mask.test, k)?,
            train_size: mask.train.len(),
            val_size: mask.val.len(),
            test_size: mask.test.len(),
            top_up_fraction: None,
            best_epoch: outcome.best_epoch,
            losses: outcome.losses(),
        })
    })();
    let status = match status {
        Ok(m) => SeedStatus::Ok(m),
        Err(e) => SeedStatus::Failed {
            error: e.to_string(),
        },
    };
    let scores: Vec<(f64, f64)> = match &status {
        SeedStatus::Ok(m) => vec![(m.weighted_f1, m.micro_f1)],
        SeedStatus::Failed { .. } => vec![],
    };
    let w: Vec<f64> = scores.iter().map(|s| s.0).collect();
    let mi: Vec<f64> = scores.iter().map(|s| s.1).collect();
    Ok(RunReport {
        config,
        dataset: DatasetSummary {
            name: data.name.clone(),
            nodes: g.node_count(),
            edges: g.edge_count(),
            classes: g.num_classes(),
            homophily: hierlab_core::graph::edge_homophily(g).ok(),
        },
        variants: vec![VariantReport {
            ablation: args.ablation,
            seeds: vec![SeedOutcome {
                seed: args.split.seed,
                status,
            }],
            weighted_f1: Aggregate::of(&w),
            micro_f1: Aggregate::of(&mi),
        }],
        wall_clock_secs: 0.0,
    })
}

/// `node,label` rows; nodes without a row stay unlabeled.
fn read_labels(path: &Path, n: usize) -> Result<Vec<Option<usize>>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut labels = vec![None; n];
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (i == 0 && line.starts_with("node")) {
            continue;
        }
        let (v, y) = line
            .split_once(',')
            .with_context(|| format!("{}:{}: expected node,label", path.display(), i + 1))?;
        let v: usize = v
            .trim()
            .parse()
            .with_context(|| format!("{}:{}", path.display(), i + 1))?;
        let y: usize = y
            .trim()
            .parse()
            .with_context(|| format!("{}:{}", path.display(), i + 1))?;
        if v >= n {
            bail!(
                "{}:{}: node {v} outside the embedding",
                path.display(),
                i + 1
            );
        }
        labels[v] = Some(y);
    }
    Ok(labels)
}

fn write_json(path: &Path, report: &RunReport) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, serde_json::to_vec_pretty(report)?)?;
    fs::rename(&tmp, path).with_context(|| format!("writing {}", path.display()))
}
