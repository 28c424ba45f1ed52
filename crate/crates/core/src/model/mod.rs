//! Temporal Fusion Transformer: static covariate encoders, variable
//! selection, LSTM encoder/decoder, interpretable attention and quantile
//! heads.

mod checkpoint;
mod config;
mod forward;
mod layers;
mod params;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint};
pub use config::{ModelConfig, STATIC_FIELDS};
pub use forward::{forward, forward_pass, quantile_heads_monotonic_repair, ForecastResult, ForecastWindow, ForwardPass};
pub use layers::{Graph, Mode, StaticCodes, StaticContexts};
pub use params::{param_count, param_specs, Init, ModelParams, ParamSpec};

use thiserror::Error;

use crate::tensor::TensorError;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    Config(String),
    #[error("static covariate {field}: code {code} outside cardinality {cardinality}")]
    StaticCode {
        field: &'static str,
        code: usize,
        cardinality: usize,
    },
    #[error("window: {0}")]
    Window(String),
    #[error("layer {layer}: {source}")]
    Layer { layer: String, source: TensorError },
    #[error("parameter {0} missing")]
    MissingParam(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<TensorError> for ModelError {
    fn from(source: TensorError) -> Self {
        ModelError::Layer {
            layer: String::new(),
            source,
        }
    }
}
