//! Windowing, quantile loss, the optimization loop and MAE evaluation.

mod eval;
mod loss;
mod optim;
mod train;
mod windows;

pub use eval::{
    evaluate_mae, mae_of, median_forecasts, persistence_forecasts, predict, seasonal_naive_forecasts, write_forecasts_csv,
    MaeReport,
};
pub use loss::{pinball, quantile_loss, quantile_loss_on_tape};
pub use optim::{clip_grad_norm, Adam, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};
pub use train::{dataset_loss, train, train_from, window_gradients, EpochRecord, TrainConfig, TrainHistory};
pub use windows::{
    known_values, make_windows, past_values, table_model_config, window_count, Moments, Normalizer,
    WindowDiagnostics, KNOWN_VARIABLES, PAST_VARIABLES, STATIC_VARIABLES,
};

use thiserror::Error;

use crate::model::ModelError;
use crate::tensor::TensorError;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("training config: {0}")]
    Config(String),
    #[error("data: {0}")]
    Data(String),
    #[error("shape: {0}")]
    Shape(String),
    #[error("loss diverged at epoch {epoch}, batch {batch}")]
    Diverged { epoch: usize, batch: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
}

impl From<TensorError> for TrainError {
    fn from(e: TensorError) -> Self {
        TrainError::Model(e.into())
    }
}
