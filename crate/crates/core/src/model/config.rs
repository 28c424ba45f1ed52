use serde::{Deserialize, Serialize};

use super::ModelError;

/// Names of the four static categorical covariates, in encoding order.
pub const STATIC_FIELDS: [&str; 4] = ["airport", "month", "local_hour", "day_of_week"];

/// Architecture hyperparameters and input inventory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub hidden_size: usize,
    pub num_attention_heads: usize,
    pub dropout_rate: f64,
    pub encoder_length: usize,
    pub decoder_length: usize,
    pub quantiles: Vec<f64>,
    /// Cardinalities of airport, month, local hour and day of week.
    pub static_cardinalities: [usize; 4],
    pub n_past: usize,
    pub n_known: usize,
    /// Diagnostic switch: the decoder LSTM is replaced by a per-step
    /// identity so that future information can only flow through attention.
    pub identity_decoder: bool,
    /// Predictions are emitted as `head * target_scale + target_center`.
    pub target_center: f64,
    pub target_scale: f64,
}


impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            hidden_size: 32,
            num_attention_heads: 4,
            dropout_rate: 0.1,
            encoder_length: 8,
            decoder_length: 16,
            quantiles: vec![0.1, 0.5, 0.9],
            static_cardinalities: [30, 12, 24, 7],
            n_past: 10,
            n_known: 12,
            identity_decoder: false,
            target_center: 0.0,
            target_scale: 1.0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let fail = |msg: String| Err(ModelError::Config(msg));
        if self.hidden_size == 0 || self.num_attention_heads == 0 {
            return fail("hidden_size and num_attention_heads must be positive".into());
        }
        if self.hidden_size % self.num_attention_heads != 0 {
            return fail(format!(
                "hidden_size {} not divisible by {} heads",
                self.hidden_size, self.num_attention_heads
            ));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return fail(format!("dropout_rate {} outside [0, 1)", self.dropout_rate));
        }
        if self.encoder_length == 0 || self.decoder_length == 0 {
            return fail("encoder and decoder lengths must be positive".into());
        }
        if self.n_past == 0 || self.n_known == 0 {
            return fail("at least one past and one known variable are required".into());
        }
        if self.static_cardinalities.contains(&0) {
            return fail("static cardinalities must be positive".into());
        }
        if self.quantiles.iter().any(|q| !(*q > 0.0 && *q < 1.0)) {
            return fail(format!("quantiles {:?} must lie in (0, 1)", self.quantiles));
        }
        if self.quantiles.windows(2).any(|w| w[0] >= w[1]) {
            return fail(format!("quantiles {:?} must be strictly increasing", self.quantiles));
        }
        if self.median_index().is_none() {
            return fail("quantile 0.5 is required for the point forecast".into());
        }
        if !(self.target_scale > 0.0 && self.target_scale.is_finite() && self.target_center.is_finite()) {
            return fail("target scaling must be finite with positive scale".into());
        }
        Ok(())
    }

    pub fn head_size(&self) -> usize {
        self.hidden_size / self.num_attention_heads
    }

    pub fn total_length(&self) -> usize {
        self.encoder_length + self.decoder_length
    }

    pub fn median_index(&self) -> Option<usize> {
        self.quantiles.iter().position(|&q| q == 0.5)
    }
}
