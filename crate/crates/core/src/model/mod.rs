//! Two-layer GCN with curvature-weighted aggregation and a hierarchy-aware
//! logit margin.
//!
//! Every node `i` aggregates over the slots `S_i = {i} ∪ N(i)` with weights
//! `τ_i· = softmax_j(curv_net(κ(i, j)))`, `κ(i, i) = 0`:
//!
//! ```text
//! H      = ReLU(T·(X·W1) + b1)
//! logits = T·(H·W2) + b2
//! ```
//!
//! Training nodes additionally carry a margin `m_v[c] = f_c · softmax_c(ham_net(‖e_v‖))`
//! where `f_c` is the share of class `c` among training labels. Gradients are
//! derived by hand and checked against finite differences in the tests.

mod mlp;
mod train;

use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

pub use mlp::ScalarMlp;
pub use train::{train, EpochStats, TrainOutcome, Trainer};

use crate::curvature::EdgeCurvatureTable;
use crate::error::{Error, Result};
use crate::graph::{Features, Graph, SplitMask};

/// Hidden width of the two scalar perceptrons.
pub const MLP_HIDDEN: usize = 16;

/// How the margin enters the logits of a training node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MarginSign {
    /// `logit[y] -= α·m[y]`; other classes untouched.
    #[default]
    Ldam,
    /// `logits += α·m` on every class.
    Literal,
}

/// Components switched off for ablation runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ablation {
    #[default]
    None,
    /// No margin.
    Ham,
    /// Uniform aggregation weights.
    Hmpnn,
    /// Both: a plain mean-aggregating GCN.
    Both,
}

impl Ablation {
    pub fn uses_margin(self) -> bool {
        matches!(self, Ablation::None | Ablation::Hmpnn)
    }

    pub fn uses_curvature(self) -> bool {
        matches!(self, Ablation::None | Ablation::Ham)
    }
}

impl std::str::FromStr for Ablation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Ablation::None),
            "ham" => Ok(Ablation::Ham),
            "hmpnn" => Ok(Ablation::Hmpnn),
            "both" => Ok(Ablation::Both),
            _ => Err(Error::InvalidArgument(format!("unknown ablation {s:?}"))),
        }
    }
}

/// Model and optimizer hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub lr: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    /// Epochs without validation weighted-F1 improvement before stopping.
    pub patience: usize,
    /// Scale of the hierarchy-aware margin; kept below the logit scale that
    /// the SGD schedule reaches in its first epochs.
    pub alpha_margin: f64,
    pub margin_sign: MarginSign,
    /// Chosen per run by the harness, so not part of the serialized form.
    #[serde(skip)]
    pub ablation: Ablation,
    pub normalize_features: bool,
    #[serde(skip)]
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            hidden: 64,
            epochs: 500,
            lr: 0.01,
            momentum: 0.9,
            weight_decay: 5e-4,
            patience: 100,
            alpha_margin: 0.1,
            margin_sign: MarginSign::Ldam,
            ablation: Ablation::None,
            normalize_features: true,
            seed: 0,
        }
    }
}

/// All learnable tensors. Also used as the gradient container.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
    /// `1 → 16 → C`
    pub ham: ScalarMlp,
    /// `1 → 16 → 1`
    pub curv: ScalarMlp,
}

fn glorot(rows: usize, cols: usize, rng: &mut impl Rng) -> Array2<f64> {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_simple_fn((rows, cols), || rng.gen_range(-limit..limit))
}

impl ModelParams {
    /// Glorot-uniform GCN weights with zero biases; see [`ScalarMlp::init`] for
    /// the perceptrons, whose zero output layers make the initial aggregation
    /// weights uniform.
    pub fn init(features: usize, hidden: usize, classes: usize, rng: &mut impl Rng) -> Self {
        ModelParams {
            w1: glorot(features, hidden, rng),
            b1: Array1::zeros(hidden),
            w2: glorot(hidden, classes, rng),
            b2: Array1::zeros(classes),
            ham: ScalarMlp::init(MLP_HIDDEN, classes, rng),
            curv: ScalarMlp::init(MLP_HIDDEN, 1, rng),
        }
    }

    pub fn zeros(features: usize, hidden: usize, classes: usize) -> Self {
        ModelParams {
            w1: Array2::zeros((features, hidden)),
            b1: Array1::zeros(hidden),
            w2: Array2::zeros((hidden, classes)),
            b2: Array1::zeros(classes),
            ham: ScalarMlp::zeros(MLP_HIDDEN, classes),
            curv: ScalarMlp::zeros(MLP_HIDDEN, 1),
        }
    }

    pub fn zeros_like(&self) -> Self {
        ModelParams::zeros(self.w1.nrows(), self.w1.ncols(), self.w2.ncols())
    }

    /// Named flat views of every tensor, in a fixed order.
    pub fn tensors(&self) -> Vec<(&'static str, &[f64])> {
        fn s(a: Option<&[f64]>) -> &[f64] {
            a.expect("parameters are contiguous")
        }
        vec![
            ("w1", s(self.w1.as_slice())),
            ("b1", s(self.b1.as_slice())),
            ("w2", s(self.w2.as_slice())),
            ("b2", s(self.b2.as_slice())),
            ("ham.w1", s(self.ham.w1.as_slice())),
            ("ham.b1", s(self.ham.b1.as_slice())),
            ("ham.w2", s(self.ham.w2.as_slice())),
            ("ham.b2", s(self.ham.b2.as_slice())),
            ("curv.w1", s(self.curv.w1.as_slice())),
            ("curv.b1", s(self.curv.b1.as_slice())),
            ("curv.w2", s(self.curv.w2.as_slice())),
            ("curv.b2", s(self.curv.b2.as_slice())),
        ]
    }

    pub fn tensors_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        fn s(a: Option<&mut [f64]>) -> &mut [f64] {
            a.expect("parameters are contiguous")
        }
        vec![
            ("w1", s(self.w1.as_slice_mut())),
            ("b1", s(self.b1.as_slice_mut())),
            ("w2", s(self.w2.as_slice_mut())),
            ("b2", s(self.b2.as_slice_mut())),
            ("ham.w1", s(self.ham.w1.as_slice_mut())),
            ("ham.b1", s(self.ham.b1.as_slice_mut())),
            ("ham.w2", s(self.ham.w2.as_slice_mut())),
            ("ham.b2", s(self.ham.b2.as_slice_mut())),
            ("curv.w1", s(self.curv.w1.as_slice_mut())),
            ("curv.b1", s(self.curv.b1.as_slice_mut())),
            ("curv.w2", s(self.curv.w2.as_slice_mut())),
            ("curv.b2", s(self.curv.b2.as_slice_mut())),
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|(_, t)| t.iter().all(|x| x.is_finite()))
    }
}

/// Aggregation slots `{i} ∪ N(i)` of every node, with the curvature of each slot.
#[derive(Debug, Clone)]
pub struct Aggregation {
    offsets: Vec<usize>,
    cols: Vec<usize>,
    kappa: Vec<f64>,
}

impl Aggregation {
    /// Slots of `g`; every slot has κ = 0 when `table` is `None`.
    pub fn new(g: &Graph, table: Option<&EdgeCurvatureTable>) -> Result<Self> {
        let n = g.node_count();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut cols = Vec::with_capacity(n + 2 * g.edge_count());
        let mut kappa = Vec::with_capacity(cols.capacity());
        offsets.push(0);
        for i in 0..n {
            cols.push(i);
            kappa.push(0.0);
            for &j in g.neighbors(i) {
                cols.push(j);
                kappa.push(match table {
                    Some(t) => t.get(i, j).ok_or(Error::MissingEdge(i.min(j), i.max(j)))?,
                    None => 0.0,
                });
            }
            offsets.push(cols.len());
        }
        Ok(Aggregation {
            offsets,
            cols,
            kappa,
        })
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn slot_count(&self) -> usize {
        self.cols.len()
    }

    /// Slot index range of node `i`; the first slot is `i` itself.
    pub fn row(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    pub fn cols(&self) -> &[usize] {
        &self.cols
    }

    pub fn kappa(&self) -> &[f64] {
        &self.kappa
    }

    /// `τ_ij = 1 / (deg(i) + 1)`.
    pub fn uniform_weights(&self) -> Vec<f64> {
        let mut tau = vec![0.0; self.slot_count()];
        for i in 0..self.node_count() {
            let r = self.row(i);
            let w = 1.0 / r.len() as f64;
            tau[r].fill(w);
        }
        tau
    }

    /// `out_i = Σ_j τ_ij z_j`.
    pub fn apply(&self, tau: &[f64], z: &Array2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros((self.node_count(), z.ncols()));
        for (i, mut row) in out.axis_iter_mut(Axis(0)).enumerate() {
            for e in self.row(i) {
                row.scaled_add(tau[e], &z.row(self.cols[e]));
            }
        }
        out
    }

    /// `out_j = Σ_i τ_ij g_i`.
    pub fn apply_transpose(&self, tau: &[f64], g: &Array2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros((self.node_count(), g.ncols()));
        for i in 0..self.node_count() {
            let gi = g.row(i);
            for e in self.row(i) {
                out.row_mut(self.cols[e]).scaled_add(tau[e], &gi);
            }
        }
        out
    }

    /// Softmax of `scores` within each node's slots.
    fn softmax_rows(&self, scores: &[f64]) -> Vec<f64> {
        let mut tau = vec![0.0; scores.len()];
        for i in 0..self.node_count() {
            let r = self.row(i);
            let m = scores[r.clone()]
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max);
            let mut z = 0.0;
            for e in r.clone() {
                tau[e] = (scores[e] - m).exp();
                z += tau[e];
            }
            for e in r {
                tau[e] /= z;
            }
        }
        tau
    }
}

/// Aggregation weights with the perceptron activations needed for backward.
#[derive(Debug, Clone)]
pub struct TauTrace {
    pub tau: Vec<f64>,
    /// Per-slot hidden pre-activations of `curv_net`; empty for uniform weights.
    hidden: Vec<f64>,
}

/// Margins of the training nodes, rows in training-mask order.
#[derive(Debug, Clone)]
pub struct MarginTrace {
    pub margins: Array2<f64>,
    /// Softmax over the perceptron outputs.
    pub probs: Array2<f64>,
    hidden: Vec<f64>,
}

/// Everything the backward pass needs from one forward evaluation.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pub tau: TauTrace,
    pub z1: Array2<f64>,
    pub a1: Array2<f64>,
    pub h: Array2<f64>,
    pub z2: Array2<f64>,
    pub logits: Array2<f64>,
    pub margin: Option<MarginTrace>,
}

impl ForwardTrace {
    /// Arg-max class of the raw logits of every node.
    pub fn predictions(&self) -> Vec<usize> {
        self.logits
            .axis_iter(Axis(0))
            .map(|r| {
                r.iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |best, (c, &x)| {
                        if x > best.1 {
                            (c, x)
                        } else {
                            best
                        }
                    })
                    .0
            })
            .collect()
    }
}

/// A graph, its training labels and the ablation wiring, ready for
/// forward and backward passes over any [`ModelParams`].
#[derive(Debug, Clone)]
pub struct Model {
    features: Features,
    agg: Aggregation,
    train: Vec<usize>,
    targets: Vec<usize>,
    class_freq: Vec<f64>,
    /// Poincaré norms of the training nodes.
    train_norms: Vec<f64>,
    classes: usize,
    alpha_margin: f64,
    margin_sign: MarginSign,
    uniform_tau: bool,
}

impl Model {
    /// `norms` is required unless the margin is ablated, `table` unless the
    /// curvature weights are ablated.
    pub fn new(
        g: &Graph,
        mask: &SplitMask,
        norms: Option<&[f64]>,
        table: Option<&EdgeCurvatureTable>,
        config: &ModelConfig,
    ) -> Result<Self> {
        let n = g.node_count();
        let raw = g.features().ok_or(Error::MissingFeatures)?;
        let features = if config.normalize_features {
            raw.row_normalized()
        } else {
            raw.clone()
        };
        if mask.train.is_empty() {
            return Err(Error::EmptyTrainMask);
        }
        let classes = g.num_classes();
        let mut targets = Vec::with_capacity(mask.train.len());
        let mut counts = vec![0usize; classes];
        for &v in &mask.train {
            g.check_node(v)?;
            let y = g.label(v).ok_or(Error::Unlabeled(v))?;
            targets.push(y);
            counts[y] += 1;
        }
        let class_freq = counts
            .iter()
            .map(|&k| k as f64 / mask.train.len() as f64)
            .collect();

        let use_margin = config.ablation.uses_margin();
        let uniform_tau = !config.ablation.uses_curvature();
        let train_norms = if use_margin {
            let norms = norms.ok_or(Error::MissingNorm(mask.train[0]))?;
            if norms.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: norms.len(),
                });
            }
            mask.train
                .iter()
                .map(|&v| {
                    let x = norms[v];
                    if x.is_finite() {
                        Ok(x)
                    } else {
                        Err(Error::MissingNorm(v))
                    }
                })
                .collect::<Result<_>>()?
        } else {
            Vec::new()
        };
        let agg = if uniform_tau {
            Aggregation::new(g, None)?
        } else {
            let table = table.ok_or_else(|| {
                Error::InvalidArgument("curvature weights need a curvature table".into())
            })?;
            if table.len() != g.edge_count() {
                return Err(Error::DimensionMismatch {
                    expected: g.edge_count(),
                    got: table.len(),
                });
            }
            Aggregation::new(g, Some(table))?
        };
        Ok(Model {
            features,
            agg,
            train: mask.train.clone(),
            targets,
            class_freq,
            train_norms,
            classes,
            alpha_margin: if use_margin { config.alpha_margin } else { 0.0 },
            margin_sign: config.margin_sign,
            uniform_tau,
        })
    }

    pub fn feature_dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn aggregation(&self) -> &Aggregation {
        &self.agg
    }

    pub fn train_nodes(&self) -> &[usize] {
        &self.train
    }

    /// Share of each class among training labels.
    pub fn class_frequencies(&self) -> &[f64] {
        &self.class_freq
    }

    pub fn alpha_margin(&self) -> f64 {
        self.alpha_margin
    }

    pub fn uses_uniform_weights(&self) -> bool {
        self.uniform_tau
    }

    /// Aggregation weights: softmax of `curv_net(κ)` over each node's slots.
    pub fn hmpnn_weights(&self, params: &ModelParams) -> TauTrace {
        if self.uniform_tau {
            return TauTrace {
                tau: self.agg.uniform_weights(),
                hidden: Vec::new(),
            };
        }
        let k = params.curv.hidden();
        let mut hidden = vec![0.0; self.agg.slot_count() * k];
        let mut scores = vec![0.0; self.agg.slot_count()];
        let mut out = [0.0];
        for (e, &kappa) in self.agg.kappa.iter().enumerate() {
            params
                .curv
                .forward(kappa, &mut hidden[e * k..(e + 1) * k], &mut out);
            scores[e] = out[0];
        }
        TauTrace {
            tau: self.agg.softmax_rows(&scores),
            hidden,
        }
    }

    /// Hierarchy-aware margins of the training nodes, or `None` when ablated.
    pub fn ham_margin(&self, params: &ModelParams) -> Option<MarginTrace> {
        if self.train_norms.is_empty() {
            return None;
        }
        let (t, c, k) = (self.train.len(), self.classes, params.ham.hidden());
        let mut hidden = vec![0.0; t * k];
        let mut probs = Array2::zeros((t, c));
        let mut out = vec![0.0; c];
        for (r, &x) in self.train_norms.iter().enumerate() {
            params
                .ham
                .forward(x, &mut hidden[r * k..(r + 1) * k], &mut out);
            softmax_in_place(&mut out);
            probs.row_mut(r).assign(&Array1::from(out.clone()));
        }
        let freq = Array1::from(self.class_freq.clone());
        let margins = &probs * &freq;
        Some(MarginTrace {
            margins,
            probs,
            hidden,
        })
    }

    pub fn forward(&self, params: &ModelParams) -> ForwardTrace {
        let tau = self.hmpnn_weights(params);
        let z1 = self.features.matmul(&params.w1);
        let a1 = self.agg.apply(&tau.tau, &z1) + &params.b1;
        let h = a1.mapv(|x| x.max(0.0));
        let z2 = h.dot(&params.w2);
        let logits = self.agg.apply(&tau.tau, &z2) + &params.b2;
        ForwardTrace {
            tau,
            z1,
            a1,
            h,
            z2,
            logits,
            margin: self.ham_margin(params),
        }
    }

    /// Margin-adjusted logits of training row `r`.
    fn adjusted(&self, trace: &ForwardTrace, r: usize) -> Vec<f64> {
        let mut adj = trace.logits.row(self.train[r]).to_vec();
        if let Some(m) = &trace.margin {
            let m = m.margins.row(r);
            match self.margin_sign {
                MarginSign::Ldam => {
                    let y = self.targets[r];
                    adj[y] -= self.alpha_margin * m[y];
                }
                MarginSign::Literal => {
                    for (a, mc) in adj.iter_mut().zip(m) {
                        *a += self.alpha_margin * mc;
                    }
                }
            }
        }
        adj
    }

    /// Mean cross-entropy of the margin-adjusted logits over training nodes.
    pub fn loss(&self, trace: &ForwardTrace) -> f64 {
        let total: f64 = (0..self.train.len())
            .map(|r| {
                let adj = self.adjusted(trace, r);
                log_sum_exp(&adj) - adj[self.targets[r]]
            })
            .sum();
        total / self.train.len() as f64
    }

    /// Exact gradient of [`Model::loss`] with respect to every parameter.
    pub fn backward(&self, params: &ModelParams, trace: &ForwardTrace) -> ModelParams {
        let n = self.agg.node_count();
        let (c, t) = (self.classes, self.train.len());
        let mut grad = params.zeros_like();

        // cross-entropy: dL/dadj = (softmax - onehot) / t, and adj is logits plus a constant shift
        let mut dlogits = Array2::<f64>::zeros((n, c));
        let mut dmargin = Array2::<f64>::zeros((t, c));
        for r in 0..t {
            let mut p = self.adjusted(trace, r);
            softmax_in_place(&mut p);
            let y = self.targets[r];
            p[y] -= 1.0;
            let v = self.train[r];
            for (k, pk) in p.iter().enumerate() {
                dlogits[[v, k]] += pk / t as f64;
            }
            match self.margin_sign {
                MarginSign::Ldam => dmargin[[r, y]] = -self.alpha_margin * p[y] / t as f64,
                MarginSign::Literal => {
                    for (k, pk) in p.iter().enumerate() {
                        dmargin[[r, k]] = self.alpha_margin * pk / t as f64;
                    }
                }
            }
        }

        if let Some(m) = &trace.margin {
            let k = params.ham.hidden();
            let mut dout = vec![0.0; c];
            for r in 0..t {
                // m = f ⊙ p, p = softmax(o)
                let p = m.probs.row(r);
                let dp: Vec<f64> = (0..c)
                    .map(|j| self.class_freq[j] * dmargin[[r, j]])
                    .collect();
                let inner: f64 = dp.iter().zip(p).map(|(a, b)| a * b).sum();
                for j in 0..c {
                    dout[j] = p[j] * (dp[j] - inner);
                }
                params.ham.backward(
                    self.train_norms[r],
                    &m.hidden[r * k..(r + 1) * k],
                    &dout,
                    &mut grad.ham,
                );
            }
        }

        let tau = &trace.tau.tau;
        grad.b2 = dlogits.sum_axis(Axis(0));
        let dz2 = self.agg.apply_transpose(tau, &dlogits);
        grad.w2 = trace.h.t().dot(&dz2);
        let dh = dz2.dot(&params.w2.t());
        let da1 = &dh * &trace.a1.mapv(|x| if x > 0.0 { 1.0 } else { 0.0 });
        grad.b1 = da1.sum_axis(Axis(0));
        let dz1 = self.agg.apply_transpose(tau, &da1);
        grad.w1 = self.features.transpose_matmul(&dz1);

        if !self.uniform_tau {
            let k = params.curv.hidden();
            let cols = &self.agg.cols;
            for i in 0..n {
                let row = self.agg.row(i);
                let dtau: Vec<f64> = row
                    .clone()
                    .map(|e| {
                        let j = cols[e];
                        dot(dlogits.row(i), trace.z2.row(j)) + dot(da1.row(i), trace.z1.row(j))
                    })
                    .collect();
                let mean: f64 = row.clone().zip(&dtau).map(|(e, d)| tau[e] * d).sum();
                for (e, d) in row.zip(&dtau) {
                    let ds = tau[e] * (d - mean);
                    params.curv.backward(
                        self.agg.kappa[e],
                        &trace.tau.hidden[e * k..(e + 1) * k],
                        &[ds],
                        &mut grad.curv,
                    );
                }
            }
        }
        grad
    }

    pub fn loss_and_grad(&self, params: &ModelParams) -> (f64, ModelParams) {
        let trace = self.forward(params);
        (self.loss(&trace), self.backward(params, &trace))
    }
}

fn dot(a: ndarray::ArrayView1<f64>, b: ndarray::ArrayView1<f64>) -> f64 {
    a.dot(&b)
}

fn log_sum_exp(x: &[f64]) -> f64 {
    let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + x.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

fn softmax_in_place(x: &mut [f64]) {
    let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    for v in x.iter_mut() {
        *v = (*v - m).exp();
        z += *v;
    }
    for v in x.iter_mut() {
        *v /= z;
    }
}
