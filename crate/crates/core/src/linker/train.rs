//! Mini-batch training with Adam and binary cross-entropy over full windows.
//!
//! Gradients are accumulated per fixed-size chunk of a batch in parallel and
//! summed in chunk order, so results are identical for any worker count.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Adam, AdamConfig, LinkerError, LinkerModel, BCE_EPS, DEFAULT_THRESHOLD};
use crate::dataset::{Dataset, Record};

const GRAD_CHUNK: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub adam: AdamConfig,
    /// Multiplies the learning rate after every epoch.
    pub lr_decay: f64,
    pub epochs: usize,
    pub hidden: usize,
    pub seed: u64,
    /// Rescale the batch gradient when its L2 norm exceeds this.
    pub max_grad_norm: Option<f64>,
    /// Save a checkpoint every this many epochs (0 disables).
    pub checkpoint_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 96,
            adam: AdamConfig { lr: 3e-3, ..Default::default() },
            lr_decay: 0.95,
            epochs: 10,
            hidden: 32,
            seed: 0,
            max_grad_norm: Some(5.0),
            checkpoint_every: 1,
        }
    }
}

impl TrainConfig {
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.batch_size == 0 {
            out.push("batch_size must be at least 1".into());
        }
        if !(self.adam.lr > 0.0) {
            out.push(format!("learning rate {} must be positive", self.adam.lr));
        }
        for (name, b) in [("beta1", self.adam.beta1), ("beta2", self.adam.beta2)] {
            if !(0.0..1.0).contains(&b) {
                out.push(format!("{name} {b} must lie in [0, 1)"));
            }
        }
        if !(self.adam.eps > 0.0) {
            out.push("adam eps must be positive".into());
        }
        if !(self.lr_decay > 0.0) {
            out.push("lr_decay must be positive".into());
        }
        if self.hidden == 0 {
            out.push("hidden must be at least 1".into());
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    /// Per-row accuracy over all rows including pads.
    pub val_accuracy: f64,
    /// Per-row accuracy over real rows only.
    pub val_accuracy_real: f64,
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    /// Parameters at the epoch with the lowest validation loss.
    pub best: LinkerModel,
    pub best_epoch: usize,
    pub last: LinkerModel,
    pub history: Vec<EpochStats>,
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training configuration: {}", .0.join("; "))]
    Config(Vec<String>),
    #[error("dataset has no non-empty training windows")]
    NoTrainingData,
    #[error("loss diverged (non-finite) in epoch {epoch}")]
    Diverged {
        epoch: usize,
        /// Last parameters whose loss was finite.
        last_finite: Box<LinkerModel>,
        history: Vec<EpochStats>,
    },
    #[error(transparent)]
    Model(#[from] LinkerError),
}

/// Summary of a model on a set of windows.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EvalStats {
    pub loss: f64,
    pub accuracy: f64,
    pub accuracy_real: f64,
    pub windows: usize,
}

pub fn evaluate<'a>(model: &LinkerModel, records: impl IntoIterator<Item = &'a Record>) -> EvalStats {
    let recs: Vec<&Record> = records.into_iter().filter(|r| !r.empty).collect();
    let per: Vec<(f64, usize, usize, usize, usize)> = recs
        .par_iter()
        .map(|r| {
            let x = r.features_f64();
            let probs = model.forward_flat(&x, crate::window::N_FEATURES).expect("dataset width matches model");
            let mut loss = 0.0;
            let (mut ok, mut ok_real) = (0, 0);
            for (i, (&p, &y)) in probs.iter().zip(&r.labels).enumerate() {
                let y = f64::from(y);
                let pc = p.clamp(BCE_EPS, 1.0 - BCE_EPS);
                loss -= y * pc.ln() + (1.0 - y) * (1.0 - pc).ln();
                let hit = (p >= DEFAULT_THRESHOLD) == (y == 1.0);
                ok += usize::from(hit);
                if i < r.n_real as usize {
                    ok_real += usize::from(hit);
                }
            }
            (loss, ok, probs.len(), ok_real, r.n_real as usize)
        })
        .collect();
    let (mut loss, mut ok, mut n, mut ok_real, mut n_real) = (0.0, 0, 0, 0, 0);
    for (l, a, b, c, d) in per {
        loss += l;
        ok += a;
        n += b;
        ok_real += c;
        n_real += d;
    }
    if n == 0 {
        return EvalStats::default();
    }
    EvalStats {
        loss: loss / n as f64,
        accuracy: ok as f64 / n as f64,
        accuracy_real: if n_real == 0 { 1.0 } else { ok_real as f64 / n_real as f64 },
        windows: recs.len(),
    }
}

/// Batch gradient and summed loss.
fn batch_gradient(model: &LinkerModel, batch: &[&Record], scale: f64) -> (Vec<f64>, f64) {
    let n = model.n_params();
    let partial: Vec<(Vec<f64>, f64)> = batch
        .par_chunks(GRAD_CHUNK)
        .map(|chunk| {
            let mut g = vec![0.0; n];
            let mut loss = 0.0;
            for r in chunk {
                loss += model.accumulate_gradient(&r.features_f64(), &r.labels_f64(), scale, &mut g);
            }
            (g, loss)
        })
        .collect();
    let mut grad = vec![0.0; n];
    let mut loss = 0.0;
    for (g, l) in partial {
        for (a, b) in grad.iter_mut().zip(&g) {
            *a += b;
        }
        loss += l;
    }
    (grad, loss)
}

pub fn train(dataset: &Dataset, cfg: &TrainConfig) -> Result<TrainReport, TrainError> {
    train_with(dataset, cfg, |_, _| {})
}

/// Trains and calls `on_epoch` after each epoch with its stats and the
/// current parameters.
pub fn train_with(
    dataset: &Dataset,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochStats, &LinkerModel),
) -> Result<TrainReport, TrainError> {
    let problems = cfg.problems();
    if !problems.is_empty() {
        return Err(TrainError::Config(problems));
    }
    let train: Vec<&Record> = dataset.train().filter(|r| !r.empty).collect();
    if train.is_empty() {
        return Err(TrainError::NoTrainingData);
    }
    let n_p = dataset.header.n_p;
    let mut model = LinkerModel::init(cfg.hidden, cfg.seed)?;
    let mut opt = Adam::new(cfg.adam, model.n_params());
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best = model.clone();
    let mut best_loss = f64::INFINITY;
    let mut best_epoch = 0;
    let mut order: Vec<usize> = (0..train.len()).collect();

    for epoch in 1..=cfg.epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(epoch as u64);
        order.shuffle(&mut rng);

        let mut total = 0.0;
        let mut rows = 0usize;
        for idx in order.chunks(cfg.batch_size) {
            let batch: Vec<&Record> = idx.iter().map(|&i| train[i]).collect();
            let scale = 1.0 / (batch.len() * n_p) as f64;
            let (mut grad, loss) = batch_gradient(&model, &batch, scale);
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(TrainError::Diverged { epoch, last_finite: Box::new(model), history });
            }
            if let Some(max) = cfg.max_grad_norm {
                let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
                if norm > max {
                    let s = max / norm;
                    grad.iter_mut().for_each(|g| *g *= s);
                }
            }
            opt.update(model.params_mut(), &grad);
            total += loss;
            rows += batch.len() * n_p;
        }
        opt.set_lr(opt.lr() * cfg.lr_decay);

        let val = evaluate(&model, dataset.validation());
        let stats = EpochStats {
            epoch,
            train_loss: total / rows as f64,
            val_loss: val.loss,
            val_accuracy: val.accuracy,
            val_accuracy_real: val.accuracy_real,
        };
        if !stats.val_loss.is_finite() {
            return Err(TrainError::Diverged { epoch, last_finite: Box::new(best), history });
        }
        // Without a validation split, fall back to the training loss.
        let score = if val.windows > 0 { val.loss } else { stats.train_loss };
        if score < best_loss {
            best_loss = score;
            best = model.clone();
            best_epoch = epoch;
        }
        history.push(stats);
        on_epoch(&stats, &model);
    }
    Ok(TrainReport { best, best_epoch, last: model, history })
}
