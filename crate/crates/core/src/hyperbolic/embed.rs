//! Poincaré embedding trained with Riemannian SGD.
//!
//! For every oriented edge `(u, v)` with sampled negatives `N` the loss is the
//! softmax cross-entropy of the positive against the negatives,
//! `d(u,v) + log(e^{-d(u,v)} + Σ_{n∈N} e^{-d(u,n)})`. The Euclidean gradient is
//! rescaled by the inverse metric `(1 - c|θ|²)² / 4` and the step is projected
//! back into the ball.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{distance_unchecked, project, sq_norm, PoincareEmbedding};
use crate::error::{Error, Result};
use crate::graph::Graph;

/// Hyperparameters of [`embed_train`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbedConfig {
    pub dim: usize,
    pub epochs: usize,
    pub lr: f64,
    pub neg_samples: usize,
    pub curvature: f64,
    /// Leading epochs run at `lr / 10`.
    pub burn_in: usize,
    /// Whether `u` itself belongs to the negative pool of `u`.
    pub self_negative: bool,
    pub seed: u64,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        EmbedConfig {
            dim: 2,
            epochs: 100,
            lr: 0.3,
            neg_samples: 10,
            curvature: 1.0,
            burn_in: 10,
            self_negative: true,
            seed: 0,
        }
    }
}

const INIT_RADIUS: f64 = 1e-3;

/// Euclidean gradient of `d(θ, x)` with respect to `θ`.
fn distance_grad(theta: &[f64], x: &[f64], c: f64) -> Vec<f64> {
    let delta: f64 = theta.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum();
    let alpha = 1.0 - c * sq_norm(theta);
    let beta = 1.0 - c * sq_norm(x);
    let gamma = 1.0 + 2.0 * c * delta / (alpha * beta);
    let root = (gamma * gamma - 1.0).sqrt();
    if root < 1e-12 {
        return vec![0.0; theta.len()];
    }
    let scale = 4.0 * c / (alpha * beta * c.sqrt() * root);
    let shrink = c * delta / alpha;
    theta
        .iter()
        .zip(x)
        .map(|(t, xi)| scale * ((t - xi) + shrink * t))
        .collect()
}

/// Loss of one oriented edge and Euclidean gradients for every node involved.
fn pair_loss_grad(
    points: &[f64],
    dim: usize,
    c: f64,
    u: usize,
    v: usize,
    negatives: &[usize],
) -> (f64, Vec<(usize, Vec<f64>)>) {
    let at = |w: usize| &points[w * dim..(w + 1) * dim];
    let targets: Vec<usize> = std::iter::once(v)
        .chain(negatives.iter().copied())
        .collect();
    let dists: Vec<f64> = targets
        .iter()
        .map(|&t| distance_unchecked(at(u), at(t), c))
        .collect();
    // log-sum-exp of -d
    let m = dists.iter().copied().fold(f64::INFINITY, f64::min);
    let z: f64 = dists.iter().map(|d| (m - d).exp()).sum();
    let loss = dists[0] - m + z.ln();

    let mut grad_u = vec![0.0; dim];
    let mut grads = Vec::with_capacity(targets.len() + 1);
    for (k, (&t, &d)) in targets.iter().zip(&dists).enumerate() {
        let p = (m - d).exp() / z;
        let coeff = if k == 0 { 1.0 - p } else { -p };
        if t == u || coeff == 0.0 {
            continue;
        }
        let gu = distance_grad(at(u), at(t), c);
        for (a, b) in grad_u.iter_mut().zip(&gu) {
            *a += coeff * b;
        }
        let gt = distance_grad(at(t), at(u), c);
        grads.push((t, gt.into_iter().map(|g| coeff * g).collect()));
    }
    grads.push((u, grad_u));
    (loss, grads)
}

/// Uniform sample without replacement from `{w : (u,w) ∉ E} ∪ {u}`, or from
/// the non-neighbors other than `u` when `self_negative` is off.
fn sample_negatives(
    g: &Graph,
    u: usize,
    k: usize,
    self_negative: bool,
    rng: &mut impl Rng,
    out: &mut Vec<usize>,
) {
    out.clear();
    let n = g.node_count();
    let allowed = |w: usize| {
        if w == u {
            self_negative
        } else {
            !g.has_edge(u, w)
        }
    };
    let pool = n - g.deg(u) - usize::from(!self_negative);
    if pool <= k {
        out.extend((0..n).filter(|&w| allowed(w)));
        return;
    }
    while out.len() < k {
        let w = rng.gen_range(0..n);
        if allowed(w) && !out.contains(&w) {
            out.push(w);
        }
    }
}

fn init_points(n: usize, dim: usize, rng: &mut impl Rng) -> Vec<f64> {
    let mut points = Vec::with_capacity(n * dim);
    for _ in 0..n {
        loop {
            let p: Vec<f64> = (0..dim)
                .map(|_| rng.gen_range(-INIT_RADIUS..INIT_RADIUS))
                .collect();
            if sq_norm(&p) < INIT_RADIUS * INIT_RADIUS {
                points.extend(p);
                break;
            }
        }
    }
    points
}

/// A fixed set of oriented edges with fixed negatives, for evaluating the
/// embedding loss and its full gradient deterministically.
#[derive(Debug, Clone)]
pub struct EmbeddingObjective {
    pub pairs: Vec<(usize, usize, Vec<usize>)>,
    pub dim: usize,
    pub curvature: f64,
}

impl EmbeddingObjective {
    /// Both orientations of every edge with `config.neg_samples` negatives
    /// each, drawn with `seed` rather than `config.seed`.
    pub fn sample(g: &Graph, config: &EmbedConfig, seed: u64) -> Self {
        let (dim, curvature) = (config.dim, config.curvature);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pairs = Vec::with_capacity(2 * g.edge_count());
        let mut negs = Vec::new();
        for &(a, b) in g.edges() {
            for (u, v) in [(a, b), (b, a)] {
                sample_negatives(
                    g,
                    u,
                    config.neg_samples,
                    config.self_negative,
                    &mut rng,
                    &mut negs,
                );
                pairs.push((u, v, negs.clone()));
            }
        }
        EmbeddingObjective {
            pairs,
            dim,
            curvature,
        }
    }

    /// Summed loss over all pairs.
    pub fn loss(&self, points: &[f64]) -> f64 {
        self.pairs
            .iter()
            .map(|(u, v, negs)| pair_loss_grad(points, self.dim, self.curvature, *u, *v, negs).0)
            .sum()
    }

    /// Euclidean gradient of [`EmbeddingObjective::loss`].
    pub fn euclidean_gradient(&self, points: &[f64]) -> Vec<f64> {
        let mut grad = vec![0.0; points.len()];
        for (u, v, negs) in &self.pairs {
            let (_, parts) = pair_loss_grad(points, self.dim, self.curvature, *u, *v, negs);
            for (w, gw) in parts {
                for (k, x) in gw.into_iter().enumerate() {
                    grad[w * self.dim + k] += x;
                }
            }
        }
        grad
    }

    /// Riemannian gradient: Euclidean gradient times `(1 - c|θ|²)² / 4`.
    pub fn riemannian_gradient(&self, points: &[f64]) -> Vec<f64> {
        let mut grad = self.euclidean_gradient(points);
        for (p, g) in points.chunks(self.dim).zip(grad.chunks_mut(self.dim)) {
            let s = (1.0 - self.curvature * sq_norm(p)).powi(2) / 4.0;
            for x in g {
                *x *= s;
            }
        }
        grad
    }
}

/// Trains a Poincaré embedding of `g`.
pub fn embed_train(g: &Graph, config: &EmbedConfig) -> Result<PoincareEmbedding> {
    embed_train_logged(g, config).map(|(e, _)| e)
}

/// As [`embed_train`], also returning the mean pair loss of every epoch.
pub fn embed_train_logged(
    g: &Graph,
    config: &EmbedConfig,
) -> Result<(PoincareEmbedding, Vec<f64>)> {
    if g.edge_count() == 0 {
        return Err(Error::EmptyEdgeSet);
    }
    if config.dim < 2 {
        return Err(Error::InvalidArgument(format!(
            "embedding dimension must be at least 2, got {}",
            config.dim
        )));
    }
    if !(config.curvature > 0.0) {
        return Err(Error::InvalidArgument("curvature must be positive".into()));
    }
    let (dim, c) = (config.dim, config.curvature);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut points = init_points(g.node_count(), dim, &mut rng);

    let mut pairs: Vec<(usize, usize)> = g
        .edges()
        .iter()
        .flat_map(|&(a, b)| [(a, b), (b, a)])
        .collect();
    let mut negs = Vec::with_capacity(config.neg_samples);
    let mut losses = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let lr = if epoch < config.burn_in {
            config.lr / 10.0
        } else {
            config.lr
        };
        pairs.shuffle(&mut rng);
        let mut total = 0.0;
        for &(u, v) in &pairs {
            sample_negatives(
                g,
                u,
                config.neg_samples,
                config.self_negative,
                &mut rng,
                &mut negs,
            );
            let (loss, grads) = pair_loss_grad(&points, dim, c, u, v, &negs);
            total += loss;
            for (w, gw) in grads {
                let p = &mut points[w * dim..(w + 1) * dim];
                let s = lr * (1.0 - c * sq_norm(p)).powi(2) / 4.0;
                for (x, gx) in p.iter_mut().zip(gw) {
                    *x -= s * gx;
                }
                project(p, c);
            }
        }
        losses.push(total / pairs.len() as f64);
    }
    Ok((PoincareEmbedding::from_points(points, dim, c)?, losses))
}
