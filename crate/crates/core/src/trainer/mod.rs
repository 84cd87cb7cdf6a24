//! Offline fitting of the network to linear-elastic stiffness triples.

mod dataset;
mod loss;
mod sampling;

use std::f64::consts::PI;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dmn::Topology;
use crate::error::{Error, Result};

pub use dataset::{Dataset, DatasetHeader, Sample, ORDERING};
pub use loss::{loss_and_gradient, mean_error, network_output, sample_error, LossConfig, NetworkParams};
pub use sampling::{
    contrast_histogram, material_contrast, sample_pair, write_histogram_csv, PairParams, SamplingConfig,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingConfig {
    pub depth: usize,
    pub batch_size: usize,
    pub loss: LossConfig,
    pub lr_max: f64,
    pub lr_min: f64,
    /// Half period `M` of the learning-rate modulation, in epochs.
    pub period: f64,
    /// Geometric decay factor per epoch.
    pub decay: f64,
    pub epochs: usize,
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            depth: 8,
            batch_size: 32,
            loss: LossConfig::default(),
            lr_max: 1.5e-2,
            lr_min: 1.5e-3,
            period: 50.0,
            decay: 0.999,
            epochs: 3000,
            train_fraction: 0.9,
            seed: 0,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidInput(msg.into()));
        if self.batch_size == 0 {
            return bad("batch size must be at least 1");
        }
        if self.loss.p < 1.0 || self.loss.q < 1.0 {
            return bad("norm exponents p and q must be at least 1");
        }
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return bad("decay must lie in (0, 1]");
        }
        if !(self.train_fraction > 0.0 && self.train_fraction <= 1.0) {
            return bad("train fraction must lie in (0, 1]");
        }
        if self.lr_min < 0.0 || self.lr_max < 0.0 || self.period <= 0.0 {
            return bad("learning rates must be nonnegative and the period positive");
        }
        Ok(())
    }
}

/// Learning rate of epoch `m` (0-based).
pub fn learning_rate(cfg: &TrainingConfig, epoch: usize) -> f64 {
    let m = epoch as f64;
    let harmonic = cfg.lr_min + 0.5 * (cfg.lr_max - cfg.lr_min) * (1.0 + (PI * m / cfg.period).cos());
    cfg.decay.powf(m) * harmonic
}

/// AMSGrad with bias-corrected moments.
#[derive(Clone, Debug)]
pub struct AmsGrad {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: i32,
    m: Vec<f64>,
    v: Vec<f64>,
    v_max: Vec<f64>,
}

impl AmsGrad {
    pub fn new(n: usize) -> Self {
        Self { beta1: 0.9, beta2: 0.999, eps: 1e-8, step: 0, m: vec![0.0; n], v: vec![0.0; n], v_max: vec![0.0; n] }
    }

    pub fn step(&mut self, x: &mut [f64], grad: &[f64], lr: f64) {
        self.step += 1;
        let c1 = 1.0 - self.beta1.powi(self.step);
        let c2 = (1.0 - self.beta2.powi(self.step)).sqrt();
        for i in 0..x.len() {
            let g = grad[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            self.v_max[i] = self.v_max[i].max(self.v[i]);
            let denom = self.v_max[i].sqrt() / c2 + self.eps;
            x[i] -= lr / c1 * self.m[i] / denom;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HistoryRow {
    pub epoch: usize,
    /// Mean batch loss over the epoch.
    pub loss: f64,
    pub error_train: f64,
    pub error_val: Option<f64>,
    pub learning_rate: f64,
}

pub fn write_history_csv<W: Write>(mut out: W, history: &[HistoryRow]) -> Result<()> {
    writeln!(out, "epoch,J,e_mean_train,e_mean_val,learning_rate")?;
    for r in history {
        let val = r.error_val.map(|v| format!("{v:.9e}")).unwrap_or_default();
        writeln!(out, "{},{:.9e},{:.9e},{},{:.9e}", r.epoch, r.loss, r.error_train, val, r.learning_rate)?;
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Fitted network with weights rescaled to unit sum.
    pub topology: Topology,
    /// Raw parameters at the end of training.
    pub params: NetworkParams,
    pub history: Vec<HistoryRow>,
    /// Sum of the clipped weights before the final rescaling.
    pub weight_sum: f64,
}

/// Trains from a random initialization drawn with the configured seed.
pub fn train(cfg: &TrainingConfig, samples: &[Sample]) -> Result<TrainOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let init = NetworkParams::random(cfg.depth, &mut rng);
    train_with_rng(cfg, samples, init, &mut rng)
}

/// Trains from given initial parameters.
pub fn train_from(cfg: &TrainingConfig, samples: &[Sample], init: NetworkParams) -> Result<TrainOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    train_with_rng(cfg, samples, init, &mut rng)
}

fn train_with_rng(
    cfg: &TrainingConfig,
    samples: &[Sample],
    init: NetworkParams,
    rng: &mut ChaCha8Rng,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.shuffle(rng);
    let n_train = ((samples.len() as f64 * cfg.train_fraction).round() as usize).min(samples.len());
    if n_train < cfg.batch_size {
        return Err(Error::InvalidInput(format!(
            "{n_train} training samples cannot fill a batch of {}",
            cfg.batch_size
        )));
    }
    let train_set: Vec<Sample> = order[..n_train].iter().map(|&i| samples[i].clone()).collect();
    let val_set: Vec<Sample> = order[n_train..].iter().map(|&i| samples[i].clone()).collect();

    let mut params = init;
    let mut x = params.to_vec();
    let mut optimizer = AmsGrad::new(x.len());
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut indices: Vec<usize> = (0..train_set.len()).collect();
    for epoch in 0..cfg.epochs {
        let lr = learning_rate(cfg, epoch);
        indices.shuffle(rng);
        let mut loss_sum = 0.0;
        let mut n_batches = 0;
        for chunk in indices.chunks_exact(cfg.batch_size) {
            let batch: Vec<&Sample> = chunk.iter().map(|&i| &train_set[i]).collect();
            let (loss, grad) = loss_and_gradient(&params, &batch, &cfg.loss)?;
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::NonFiniteLoss(epoch));
            }
            optimizer.step(&mut x, &grad, lr);
            params.set_from_slice(&x);
            loss_sum += loss;
            n_batches += 1;
        }
        let error_train = mean_error(&params, &train_set)?;
        let error_val = if val_set.is_empty() { None } else { Some(mean_error(&params, &val_set)?) };
        let row = HistoryRow { epoch, loss: loss_sum / n_batches as f64, error_train, error_val, learning_rate: lr };
        log::debug!("epoch {epoch}: J = {:.4e}, e_train = {error_train:.4e}, lr = {lr:.3e}", row.loss);
        history.push(row);
    }
    let weight_sum = params.clipped_weights().iter().sum();
    Ok(TrainOutcome { topology: params.to_topology()?, params, history, weight_sum })
}
