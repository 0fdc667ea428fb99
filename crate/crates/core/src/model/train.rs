//! Successful-epoch training loop.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamState, DEFAULT_LEARNING_RATE};
use super::batch::{Batcher, FeatureStore, WindowView};
use super::network::{backward, forward, mse_loss, Mode};
use super::params::{ModelParams, ModelShape, DEFAULT_DROPOUT};
use crate::numerics::{Matrix, Rng};
use crate::{Error, Result};

/// Anything that maps a window (one matrix per step) to horizon-1
/// predictions.
pub trait Forecaster {
    fn predict(&self, inputs: &[Matrix]) -> Result<Matrix>;
}

impl Forecaster for ModelParams {
    fn predict(&self, inputs: &[Matrix]) -> Result<Matrix> {
        // eval mode never draws from the generator
        let mut unused = Rng::new(0);
        Ok(forward(inputs, self, Mode::Eval, &mut unused)?.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub target_successful_epochs: usize,
    /// Hard cap on total epochs; `None` means ten times the target.
    pub max_epochs: Option<usize>,
    pub learning_rate: f64,
    pub l_seq: usize,
    pub encoder_size: usize,
    pub hidden_size: usize,
    pub dropout_rate: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            target_successful_epochs: 120,
            max_epochs: None,
            learning_rate: DEFAULT_LEARNING_RATE,
            l_seq: 21,
            encoder_size: 64,
            hidden_size: 64,
            dropout_rate: DEFAULT_DROPOUT,
            seed: 42,
        }
    }
}

impl TrainConfig {
    pub fn epoch_cap(&self) -> usize {
        self.max_epochs.unwrap_or(self.target_successful_epochs.saturating_mul(10))
    }

    pub fn shape(&self, store: &FeatureStore) -> ModelShape {
        ModelShape {
            n_inputs: store.n_inputs(),
            encoder_size: self.encoder_size,
            hidden_size: self.hidden_size,
            n_targets: store.n_targets(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_rmse: f64,
    pub val_rmse: f64,
    pub successful: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossHistory {
    pub records: Vec<EpochRecord>,
}

impl LossHistory {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn successful_epochs(&self) -> usize {
        self.records.iter().filter(|r| r.successful).count()
    }

    pub fn last(&self) -> Option<&EpochRecord> {
        self.records.last()
    }

    /// Writes `epoch,train_rmse,val_rmse,successful`, one row per epoch.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "epoch,train_rmse,val_rmse,successful")?;
        for r in &self.records {
            writeln!(out, "{},{},{},{}", r.epoch, r.train_rmse, r.val_rmse, r.successful)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Root-mean-square error of `model` over every window of `view`.
pub fn window_rmse(model: &dyn Forecaster, store: &FeatureStore, view: &WindowView, l_seq: usize) -> Result<f64> {
    let batcher = Batcher::new(store, view.clone(), l_seq)?;
    let mut total = 0.0;
    for i in 0..batcher.len() {
        let batch = batcher.batch_at(i)?;
        let pred = model.predict(&batch.inputs)?;
        total += mse_loss(&pred, &batch.targets)?.0;
    }
    Ok((total / batcher.len() as f64).sqrt())
}

/// Trains freshly initialized parameters. See [`train_from`].
pub fn train(cfg: &TrainConfig, store: &FeatureStore, train_view: &WindowView, val_view: Option<&WindowView>) -> Result<(ModelParams, LossHistory)> {
    let root = Rng::new(cfg.seed);
    let params = ModelParams::init(cfg.shape(store), cfg.dropout_rate, &mut root.derive(0))?;
    train_from(params, cfg, store, train_view, val_view)
}

/// Sweeps every training window in order each epoch, one Adam step per
/// window, until `target_successful_epochs` epochs improved the training or
/// validation RMSE over the previous epoch (or the epoch cap is hit).
pub fn train_from(mut params: ModelParams, cfg: &TrainConfig, store: &FeatureStore, train_view: &WindowView, val_view: Option<&WindowView>) -> Result<(ModelParams, LossHistory)> {
    let mut history = LossHistory::default();
    if cfg.target_successful_epochs == 0 {
        return Ok((params, history));
    }
    if cfg.shape(store) != params.shape() {
        return Err(Error::Shape(format!(
            "parameters are {:?}, data needs {:?}",
            params.shape(),
            cfg.shape(store)
        )));
    }
    let batcher = Batcher::new(store, train_view.clone(), cfg.l_seq)?;
    let mut adam = AdamState::new(&params, cfg.learning_rate);
    let mut dropout_rng = Rng::new(cfg.seed).derive(1);
    let (mut prev_train, mut prev_val) = (f64::INFINITY, f64::INFINITY);
    let mut successes = 0;

    for epoch in 1..=cfg.epoch_cap() {
        let mut total = 0.0;
        for i in 0..batcher.len() {
            let batch = batcher.batch_at(i)?;
            let (pred, cache) = forward(&batch.inputs, &params, Mode::Train, &mut dropout_rng)?;
            let (loss, d_pred) = mse_loss(&pred, &batch.targets)?;
            if !loss.is_finite() {
                return Err(Error::Training {
                    epoch,
                    message: format!("non-finite loss at window {i}"),
                });
            }
            total += loss;
            let grads = backward(&cache, &params, &d_pred)?;
            adam_step(&mut params, &grads, &mut adam).map_err(|e| Error::Training {
                epoch,
                message: e.to_string(),
            })?;
        }
        let train_rmse = (total / batcher.len() as f64).sqrt();
        let val_rmse = match val_view {
            Some(v) => window_rmse(&params, store, v, cfg.l_seq)?,
            None => f64::NAN,
        };
        if !train_rmse.is_finite() || (val_view.is_some() && !val_rmse.is_finite()) {
            return Err(Error::Training {
                epoch,
                message: "loss diverged".into(),
            });
        }
        let successful = train_rmse < prev_train || val_rmse < prev_val;
        log::info!("epoch {epoch}: train {train_rmse:.6} val {val_rmse:.6} {}", if successful { "+" } else { "-" });
        history.records.push(EpochRecord {
            epoch,
            train_rmse,
            val_rmse,
            successful,
        });
        prev_train = train_rmse;
        prev_val = val_rmse;
        if successful {
            successes += 1;
            if successes == cfg.target_successful_epochs {
                break;
            }
        }
    }
    Ok((params, history))
}
