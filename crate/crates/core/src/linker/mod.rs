//! The link predictor: a stacked bidirectional GRU with a sigmoid head that
//! scores, for each row of a window, whether that pick shares the root
//! pick's origin.

mod adam;
pub mod checkpoint;
mod gru;
pub mod params;
pub mod train;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use adam::{Adam, AdamConfig};
pub use checkpoint::{load_model, save_model, CheckpointError, CheckpointHeader};
pub use params::{Layout, TensorInfo};
pub use train::{evaluate, train, train_with, EpochStats, EvalStats, TrainConfig, TrainError, TrainReport};

use crate::window::{FeatureRow, SubSequence, N_FEATURES};

/// Probability clip used by the loss.
pub const BCE_EPS: f64 = 1e-7;

pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Error)]
pub enum LinkerError {
    #[error("{layer}: expected input width {expected}, got {got}")]
    InputWidth { layer: &'static str, expected: usize, got: usize },
    #[error("{tensor}: parameter vector too short ({got} values, need {need})")]
    ShortParams { tensor: String, need: usize, got: usize },
    #[error("parameter vector has {extra} trailing values after dense.b")]
    LongParams { extra: usize },
    #[error("length mismatch: {labels} labels vs {probs} probabilities")]
    LengthMismatch { labels: usize, probs: usize },
    #[error("hidden size must be at least 1")]
    ZeroHidden,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkerModel {
    layout: Layout,
    params: Vec<f64>,
}

impl LinkerModel {
    /// All-zero parameters.
    pub fn zeros(hidden: usize) -> Result<Self, LinkerError> {
        if hidden == 0 {
            return Err(LinkerError::ZeroHidden);
        }
        let layout = Layout::new(N_FEATURES, hidden);
        let params = vec![0.0; layout.total];
        Ok(Self { layout, params })
    }

    /// Weights uniform on `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`, biases zero.
    pub fn init(hidden: usize, seed: u64) -> Result<Self, LinkerError> {
        let mut m = Self::zeros(hidden)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for t in m.layout.tensors() {
            if t.shape.len() == 1 && t.name != "dense.w" {
                continue;
            }
            let fan_in = if t.name == "dense.w" { t.shape[0] } else { t.shape[1] };
            let bound = 1.0 / (fan_in as f64).sqrt();
            for v in &mut m.params[t.range()] {
                *v = rng.gen_range(-bound..=bound);
            }
        }
        Ok(m)
    }

    pub fn from_params(input: usize, hidden: usize, params: Vec<f64>) -> Result<Self, LinkerError> {
        if hidden == 0 {
            return Err(LinkerError::ZeroHidden);
        }
        if input != N_FEATURES {
            return Err(LinkerError::InputWidth { layer: "gru1", expected: N_FEATURES, got: input });
        }
        let layout = Layout::new(input, hidden);
        if params.len() < layout.total {
            let t =
                layout.tensors().into_iter().find(|t| t.range().end > params.len()).expect("some tensor must overflow");
            return Err(LinkerError::ShortParams { need: t.range().end, tensor: t.name, got: params.len() });
        }
        if params.len() > layout.total {
            return Err(LinkerError::LongParams { extra: params.len() - layout.total });
        }
        Ok(Self { layout, params })
    }

    pub fn hidden(&self) -> usize {
        self.layout.hidden
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn n_params(&self) -> usize {
        self.layout.total
    }

    /// Per-row link probabilities.
    pub fn forward(&self, rows: &[FeatureRow]) -> Vec<f64> {
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        gru::forward(&self.layout, &self.params, &flat, rows.len()).probs
    }

    /// Same as [`LinkerModel::forward`] on a flat row-major matrix of the
    /// given width.
    pub fn forward_flat(&self, features: &[f64], width: usize) -> Result<Vec<f64>, LinkerError> {
        if width != self.layout.input || features.len() % width != 0 {
            return Err(LinkerError::InputWidth { layer: "gru1", expected: self.layout.input, got: width });
        }
        Ok(gru::forward(&self.layout, &self.params, features, features.len() / width).probs)
    }

    /// Adds `scale * dL/dθ` of the summed cross-entropy of one window to
    /// `grad` and returns the unscaled summed loss.
    pub fn accumulate_gradient(&self, features: &[f64], labels: &[f64], scale: f64, grad: &mut [f64]) -> f64 {
        let steps = labels.len();
        let cache = gru::forward(&self.layout, &self.params, features, steps);
        let mut loss = 0.0;
        let dlogits: Vec<f64> = cache
            .probs
            .iter()
            .zip(labels)
            .map(|(&p, &y)| {
                loss += point_loss(y, p);
                scale * (p - y)
            })
            .collect();
        gru::backward(&self.layout, &self.params, &cache, &dlogits, grad);
        loss
    }

    /// Same network with the two directions of every layer exchanged. Running
    /// it on a time-reversed window yields the time-reversed output.
    pub fn mirrored(&self) -> Self {
        let l = &self.layout;
        let h = l.hidden;
        let mut p = self.params.clone();
        for dirs in [&l.l1, &l.l2] {
            let (a, b) = (dirs[0].range(), dirs[1].range());
            p[a.clone()].copy_from_slice(&self.params[b.clone()]);
            p[b].copy_from_slice(&self.params[a]);
        }
        // Layer 2 reads [fwd | bwd] of layer 1: swap those input columns.
        for d in &l.l2 {
            let w = &mut p[d.offset..d.offset + d.w_in_len()];
            for row in w.chunks_exact_mut(2 * h) {
                let (x, y) = row.split_at_mut(h);
                x.swap_with_slice(y);
            }
        }
        let dw = &mut p[l.dense_w..l.dense_b];
        let (x, y) = dw.split_at_mut(h);
        x.swap_with_slice(y);
        Self { layout: l.clone(), params: p }
    }
}

fn point_loss(y: f64, p: f64) -> f64 {
    let p = p.clamp(BCE_EPS, 1.0 - BCE_EPS);
    -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
}

/// Mean binary cross-entropy with probabilities clipped to `[eps, 1-eps]`.
pub fn bce_loss(labels: &[f64], probs: &[f64]) -> Result<f64, LinkerError> {
    if labels.len() != probs.len() {
        return Err(LinkerError::LengthMismatch { labels: labels.len(), probs: probs.len() });
    }
    if labels.is_empty() {
        return Ok(0.0);
    }
    Ok(labels.iter().zip(probs).map(|(&y, &p)| point_loss(y, p)).sum::<f64>() / labels.len() as f64)
}

/// Link decision for one window.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub root_index: usize,
    /// Global pick index per real row.
    pub members: Vec<usize>,
    /// Length `n_p`.
    pub probs: Vec<f64>,
    /// Length `n_p`; pads are always 0.
    pub labels: Vec<u8>,
}

impl Prediction {
    /// Global indices of the picks labeled as linked to the root.
    pub fn linked(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter().zip(&self.labels).filter(|(_, &l)| l == 1).map(|(&m, _)| m)
    }

    pub fn n_linked(&self) -> usize {
        self.labels.iter().map(|&l| l as usize).sum()
    }
}

pub fn predict(model: &LinkerModel, sub: &SubSequence, threshold: f64) -> Prediction {
    let probs = model.forward(&sub.rows);
    let n = sub.n_real();
    let labels = probs.iter().enumerate().map(|(i, &p)| u8::from(i < n && p >= threshold)).collect();
    Prediction { root_index: sub.root_index, members: sub.members.clone(), probs, labels }
}

/// Exact links from ground truth: the root's event, or only the root when it
/// is a false pick. Uses the event ids carried by the window.
pub fn oracle_link(sub: &SubSequence) -> Prediction {
    let n_p = sub.rows.len();
    let mut labels = vec![0u8; n_p];
    match sub.events.first().copied().flatten() {
        Some(ev) => {
            for (l, &e) in labels.iter_mut().zip(&sub.events) {
                *l = u8::from(e == Some(ev));
            }
        }
        None => {
            if n_p > 0 {
                labels[0] = 1;
            }
        }
    }
    Prediction {
        root_index: sub.root_index,
        members: sub.members.clone(),
        probs: labels.iter().map(|&l| f64::from(l)).collect(),
        labels,
    }
}
