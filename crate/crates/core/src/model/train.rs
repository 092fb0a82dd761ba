//! Full-batch SGD with momentum and early stopping on validation weighted-F1.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Model, ModelConfig, ModelParams};
use crate::curvature::EdgeCurvatureTable;
use crate::error::{Error, Result};
use crate::graph::{Graph, SplitMask};
use crate::harness::metrics::weighted_f1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub loss: f64,
    /// `None` when the validation mask is empty.
    pub val_weighted_f1: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters of the best validation epoch (the last epoch without validation).
    pub params: ModelParams,
    pub history: Vec<EpochStats>,
    pub best_epoch: usize,
}

impl TrainOutcome {
    pub fn losses(&self) -> Vec<f64> {
        self.history.iter().map(|s| s.loss).collect()
    }
}

/// Step-by-step training loop, so callers can inspect parameters between epochs.
#[derive(Debug)]
pub struct Trainer<'a> {
    model: &'a Model,
    config: ModelConfig,
    labels: Vec<Option<usize>>,
    val: Vec<usize>,
    params: ModelParams,
    velocity: ModelParams,
    best: Option<(f64, usize, ModelParams)>,
    history: Vec<EpochStats>,
    since_best: usize,
}

impl<'a> Trainer<'a> {
    pub fn new(model: &'a Model, g: &Graph, mask: &SplitMask, config: &ModelConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let params = ModelParams::init(
            model.feature_dim(),
            config.hidden,
            model.classes(),
            &mut rng,
        );
        let velocity = params.zeros_like();
        Trainer {
            model,
            config: config.clone(),
            labels: g.labels().to_vec(),
            val: mask.val.clone(),
            params,
            velocity,
            best: None,
            history: Vec::new(),
            since_best: 0,
        }
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn history(&self) -> &[EpochStats] {
        &self.history
    }

    /// True once the epoch cap or the patience budget is exhausted.
    pub fn is_done(&self) -> bool {
        self.history.len() >= self.config.epochs
            || (!self.val.is_empty() && self.since_best >= self.config.patience)
    }

    /// One full-batch step. Validation is scored on the parameters before the update.
    pub fn step(&mut self) -> Result<EpochStats> {
        let trace = self.model.forward(&self.params);
        let loss = self.model.loss(&trace);
        if !loss.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "training diverged at epoch {}",
                self.history.len()
            )));
        }
        let epoch = self.history.len();
        let val_weighted_f1 = if self.val.is_empty() {
            None
        } else {
            let pred = trace.predictions();
            let f1 = weighted_f1(&pred, &self.labels, &self.val, self.model.classes())?;
            if self.best.as_ref().is_none_or(|b| f1 > b.0) {
                self.best = Some((f1, epoch, self.params.clone()));
                self.since_best = 0;
            } else {
                self.since_best += 1;
            }
            Some(f1)
        };

        let grad = self.model.backward(&self.params, &trace);
        let (lr, mu, wd) = (
            self.config.lr,
            self.config.momentum,
            self.config.weight_decay,
        );
        for (((_, p), (_, g)), (_, v)) in self
            .params
            .tensors_mut()
            .into_iter()
            .zip(grad.tensors())
            .zip(self.velocity.tensors_mut())
        {
            for ((p, g), v) in p.iter_mut().zip(g).zip(v.iter_mut()) {
                *v = mu * *v + g + wd * *p;
                *p -= lr * *v;
            }
        }
        let stats = EpochStats {
            epoch,
            loss,
            val_weighted_f1,
        };
        self.history.push(stats);
        Ok(stats)
    }

    pub fn finish(self) -> TrainOutcome {
        match self.best {
            Some((_, best_epoch, params)) => TrainOutcome {
                params,
                history: self.history,
                best_epoch,
            },
            None => TrainOutcome {
                best_epoch: self.history.len().saturating_sub(1),
                params: self.params,
                history: self.history,
            },
        }
    }
}

/// Builds the model and runs [`Trainer`] to completion.
pub fn train(
    g: &Graph,
    mask: &SplitMask,
    norms: Option<&[f64]>,
    table: Option<&EdgeCurvatureTable>,
    config: &ModelConfig,
) -> Result<(Model, TrainOutcome)> {
    let model = Model::new(g, mask, norms, table, config)?;
    let outcome = {
        let mut trainer = Trainer::new(&model, g, mask, config);
        while !trainer.is_done() {
            let s = trainer.step()?;
            log::debug!(
                "epoch {} loss {:.5} val {:?}",
                s.epoch,
                s.loss,
                s.val_weighted_f1
            );
        }
        trainer.finish()
    };
    Ok((model, outcome))
}
