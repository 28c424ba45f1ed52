use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::loss::{quantile_loss, quantile_loss_on_tape};
use super::optim::{clip_grad_norm, Adam};
use super::TrainError;
use crate::model::{forward, forward_pass, ForecastWindow, Mode, ModelConfig, ModelParams};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub grad_clip: f64,
    pub seed: u64,
    /// Quarters between consecutive training-window origins.
    pub window_stride: usize,
    pub model: ModelConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            batch_size: 64,
            max_epochs: 30,
            patience: 5,
            grad_clip: 1.0,
            seed: 0,
            window_stride: 1,
            model: ModelConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(TrainError::Config(format!("learning_rate {} must be non-negative", self.learning_rate)));
        }
        if self.batch_size == 0 || self.patience == 0 || self.window_stride == 0 {
            return Err(TrainError::Config("batch_size, patience and window_stride must be at least 1".into()));
        }
        if !(self.grad_clip > 0.0) {
            return Err(TrainError::Config("grad_clip must be positive".into()));
        }
        self.model.validate().map_err(|e| TrainError::Config(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self, TrainError> {
        let cfg: Self = toml::from_str(text).map_err(|e| TrainError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn load(path: &Path) -> Result<Self, TrainError> {
        let text = std::fs::read_to_string(path).map_err(|e| TrainError::Io(path.display().to_string(), e))?;
        Self::from_toml(&text)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    /// Wall time; left out of the metrics CSV.
    #[serde(skip)]
    pub seconds: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
}

impl TrainHistory {
    /// (train, validation) losses per epoch, without timings.
    pub fn losses(&self) -> Vec<(f64, f64)> {
        self.epochs.iter().map(|e| (e.train_loss, e.val_loss)).collect()
    }

    pub fn best_val_loss(&self) -> Option<f64> {
        self.epochs.get(self.best_epoch).map(|e| e.val_loss)
    }

    /// `epoch,train_loss,val_loss,seconds`.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for e in &self.epochs {
            w.serialize(e)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Mean quantile loss of inference-mode forecasts.
pub fn dataset_loss(params: &ModelParams, config: &ModelConfig, windows: &[ForecastWindow]) -> Result<f64, TrainError> {
    if windows.is_empty() {
        return Err(TrainError::Data("no windows".into()));
    }
    let mut total = 0.0;
    for w in windows {
        let r = forward(w, params, config, Mode::Infer, 0)?;
        total += quantile_loss(&r.predictions, &w.target, &config.quantiles)?;
    }
    Ok(total / windows.len() as f64)
}

/// Loss and parameter gradients of one window in training mode.
pub fn window_gradients(
    window: &ForecastWindow,
    params: &ModelParams,
    config: &ModelConfig,
    dropout_seed: u64,
) -> Result<(f64, BTreeMap<String, crate::tensor::Tensor>), TrainError> {
    let mut pass = forward_pass(window, params, config, Mode::Train, dropout_seed)?;
    let tape = &mut pass.graph.tape;
    let loss = quantile_loss_on_tape(tape, pass.raw_predictions, &window.target, &config.quantiles)?;
    let value = tape.value(loss).item();
    let grads = tape.backward(loss)?;
    Ok((value, grads.named()))
}

pub fn train(
    windows: &[ForecastWindow],
    val_windows: &[ForecastWindow],
    config: &TrainConfig,
) -> Result<(ModelParams, TrainHistory), TrainError> {
    let init = ModelParams::init(&config.model, config.seed)?;
    train_from(init, windows, val_windows, config, |_| {})
}

/// Trains starting from `params`, calling `on_epoch` after every epoch.
pub fn train_from(
    mut params: ModelParams,
    windows: &[ForecastWindow],
    val_windows: &[ForecastWindow],
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<(ModelParams, TrainHistory), TrainError> {
    config.validate()?;
    if windows.is_empty() || val_windows.is_empty() {
        return Err(TrainError::Data("training and validation window sets must be non-empty".into()));
    }
    for w in windows.iter().chain(val_windows) {
        w.validate(&config.model)?;
        if w.target.is_empty() {
            return Err(TrainError::Data(format!("window at origin {} has no target", w.origin)));
        }
    }
    let model = &config.model;
    let mut adam = Adam::new(config.learning_rate);
    let mut history = TrainHistory::default();
    let mut best: Option<(f64, ModelParams)> = None;
    let mut stale = 0;
    let mut order: Vec<usize> = (0..windows.len()).collect();

    for epoch in 0..config.max_epochs {
        let started = Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(epoch as u64 + 1);
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for (b, batch) in order.chunks(config.batch_size).enumerate() {
            let mut acc: BTreeMap<String, Vec<f64>> = BTreeMap::new();
            let mut batch_loss = 0.0;
            for &i in batch {
                let (loss, grads) = window_gradients(&windows[i], &params, model, rng.gen())?;
                if !loss.is_finite() {
                    return Err(TrainError::Diverged { epoch, batch: b });
                }
                batch_loss += loss;
                for (name, g) in grads {
                    let slot = acc.entry(name).or_insert_with(|| vec![0.0; g.numel()]);
                    for (s, v) in slot.iter_mut().zip(g.data()) {
                        *s += v;
                    }
                }
            }
            let inv = 1.0 / batch.len() as f64;
            acc.values_mut().flatten().for_each(|g| *g *= inv);
            if !clip_grad_norm(&mut acc, config.grad_clip).is_finite() {
                return Err(TrainError::Diverged { epoch, batch: b });
            }
            adam.step(&mut params, &acc);
            epoch_loss += batch_loss;
        }
        let train_loss = epoch_loss / windows.len() as f64;
        let val_loss = dataset_loss(&params, model, val_windows)?;
        if !val_loss.is_finite() || !train_loss.is_finite() {
            return Err(TrainError::Diverged {
                epoch,
                batch: order.len().div_ceil(config.batch_size),
            });
        }
        let record = EpochRecord {
            epoch,
            train_loss,
            val_loss,
            seconds: started.elapsed().as_secs_f64(),
        };
        on_epoch(&record);
        history.epochs.push(record);
        if best.as_ref().is_none_or(|(b, _)| val_loss < *b) {
            best = Some((val_loss, params.clone()));
            history.best_epoch = epoch;
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.patience {
                break;
            }
        }
    }
    let params = best.map_or(params, |(_, p)| p);
    Ok((params, history))
}
