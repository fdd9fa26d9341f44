use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{Autoencoder, Gradients};
use super::{AutoencoderError, Result};
use crate::neuralcore::{AdamConfig, AdamState, Real, Tensor3};
use crate::trackdata::FeatureWindow;

pub const MIN_TRAINING_WINDOWS: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub validation_fraction: f64,
    pub patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            batch_size: 32,
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            validation_fraction: 0.2,
            patience: 20,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(AutoencoderError::InvalidConfig(m.into()));
        if self.epochs == 0 {
            return bad("epochs must be >= 1");
        }
        if self.batch_size == 0 {
            return bad("batch size must be >= 1");
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return bad("validation fraction must be in (0, 1)");
        }
        if !(self.lr > 0.0) || !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("optimizer hyperparameters out of range");
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be > 0");
        }
        Ok(())
    }

    fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WindowLabel {
    Helicopter,
    NonHelicopter,
    Unlabeled,
}

/// A feature window with the class tag the trainer checks before use.
#[derive(Debug, Clone, PartialEq)]
pub struct TaggedWindow {
    pub window: FeatureWindow,
    pub label: WindowLabel,
}

impl TaggedWindow {
    pub fn helicopter(window: FeatureWindow) -> Self {
        Self {
            window,
            label: WindowLabel::Helicopter,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    /// Mean per-window MAE over the fitting split, accumulated during the epoch.
    pub train_mae: f64,
    pub val_mae: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub history: Vec<EpochLoss>,
    /// Epoch whose weights were kept.
    pub best_epoch: usize,
    pub stopped_early: bool,
    pub train_size: usize,
    pub val_size: usize,
}

/// Per-sample gradients are computed in parallel and summed in sample order,
/// so results do not depend on the worker count.
fn batch_step(model: &Autoencoder, inputs: &[Tensor3], batch: &[usize]) -> Result<(Real, Gradients)> {
    let parts: Vec<(Real, Gradients)> = batch
        .par_iter()
        .map(|&i| model.loss_and_grad(&inputs[i]))
        .collect::<Result<_>>()?;
    let mut iter = parts.into_iter();
    let (mut loss, mut grads) = iter.next().expect("non-empty batch");
    for (l, g) in iter {
        loss += l;
        grads.add_assign(&g);
    }
    let k = 1.0 / batch.len() as Real;
    grads.scale(k);
    Ok((loss, grads))
}

fn mean_error(model: &Autoencoder, inputs: &[Tensor3], idx: &[usize]) -> Result<f64> {
    let errs: Vec<Real> = idx
        .par_iter()
        .map(|&i| -> Result<Real> {
            let x = &inputs[i];
            Ok(crate::neuralcore::mae(x, &model.forward(x)?)?)
        })
        .collect::<Result<_>>()?;
    Ok(errs.iter().map(|&e| e as f64).sum::<f64>() / idx.len() as f64)
}

/// Trains on helicopter windows with Adam and early stopping on a held-out
/// validation split; the weights of the best validation epoch are kept.
pub fn train(model: &mut Autoencoder, windows: &[TaggedWindow], cfg: &TrainConfig) -> Result<TrainReport> {
    cfg.validate()?;
    if let Some(w) = windows.iter().find(|w| w.label != WindowLabel::Helicopter) {
        return Err(AutoencoderError::NonHelicopterInput(w.window.source_track_id.clone()));
    }
    if windows.len() < MIN_TRAINING_WINDOWS {
        return Err(AutoencoderError::TooFewWindows {
            found: windows.len(),
            required: MIN_TRAINING_WINDOWS,
        });
    }
    let inputs: Vec<Tensor3> = windows
        .iter()
        .map(|w| model.window_tensor(&w.window))
        .collect::<Result<_>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    order.shuffle(&mut rng);
    let n_val = ((inputs.len() as f64 * cfg.validation_fraction).round() as usize).clamp(1, inputs.len() - 1);
    let val_idx = order[..n_val].to_vec();
    let mut fit_idx = order[n_val..].to_vec();

    let mut adam = AdamState::new(cfg.adam(), &model.param_sizes());
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best = (f64::INFINITY, 0usize, model.clone());
    let mut since_best = 0;
    let mut stopped_early = false;

    for epoch in 1..=cfg.epochs {
        fit_idx.shuffle(&mut rng);
        let mut loss_sum = 0.0f64;
        for batch in fit_idx.chunks(cfg.batch_size) {
            let (loss, grads) = batch_step(model, &inputs, batch)?;
            let loss = loss as f64;
            if !loss.is_finite() {
                return Err(AutoencoderError::Diverged { epoch, loss });
            }
            loss_sum += loss;
            adam.step(&mut model.param_slices_mut(), &grads.as_slices())?;
        }
        let train_mae = loss_sum / fit_idx.len() as f64;
        let val_mae = mean_error(model, &inputs, &val_idx)?;
        if !val_mae.is_finite() {
            return Err(AutoencoderError::Diverged { epoch, loss: val_mae });
        }
        history.push(EpochLoss {
            epoch,
            train_mae,
            val_mae,
        });
        log::debug!("epoch {epoch}: train {train_mae:.6} val {val_mae:.6}");
        if val_mae < best.0 {
            best = (val_mae, epoch, model.clone());
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                stopped_early = true;
                break;
            }
        }
    }
    let best_epoch = best.1;
    *model = best.2;
    Ok(TrainReport {
        history,
        best_epoch,
        stopped_early,
        train_size: fit_idx.len(),
        val_size: val_idx.len(),
    })
}
