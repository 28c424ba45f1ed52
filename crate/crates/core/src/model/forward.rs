use super::config::ModelConfig;
use super::layers::{Graph, Mode, StaticCodes};
use super::params::ModelParams;
use super::ModelError;
use crate::tensor::{Tensor, Var};

/// One training or inference sample.
#[derive(Clone, Debug, PartialEq)]
pub struct ForecastWindow {
    pub statics: StaticCodes,
    /// Quarter-hour index (UTC) of the first decoder step.
    pub origin: i64,
    /// `[encoder_length, n_past]` past-observed inputs, time indices −enc…−1.
    pub past: Tensor,
    /// `[encoder_length + decoder_length, n_known]` a-priori known inputs.
    pub known: Tensor,
    /// Smoothed arrival delay over the encoder steps (minutes).
    pub target_past: Vec<f64>,
    /// Smoothed arrival delay over the decoder steps (minutes); empty when
    /// the future is unknown.
    pub target: Vec<f64>,
}

impl ForecastWindow {
    pub fn validate(&self, config: &ModelConfig) -> Result<(), ModelError> {
        self.statics.validate(&config.static_cardinalities)?;
        let want_past = [config.encoder_length, config.n_past];
        let want_known = [config.total_length(), config.n_known];
        if self.past.shape() != want_past {
            return Err(ModelError::Window(format!(
                "past block {:?}, expected {:?}",
                self.past.shape(),
                want_past
            )));
        }
        if self.known.shape() != want_known {
            return Err(ModelError::Window(format!(
                "known block {:?}, expected {:?}",
                self.known.shape(),
                want_known
            )));
        }
        if self.target_past.len() != config.encoder_length {
            return Err(ModelError::Window(format!(
                "{} past targets for encoder length {}",
                self.target_past.len(),
                config.encoder_length
            )));
        }
        if !self.target.is_empty() && self.target.len() != config.decoder_length {
            return Err(ModelError::Window(format!(
                "{} targets for decoder length {}",
                self.target.len(),
                config.decoder_length
            )));
        }
        if self.target_past.iter().chain(&self.target).any(|v| !v.is_finite()) {
            return Err(ModelError::Window("non-finite target".into()));
        }
        Ok(())
    }
}

/// Quantile forecasts plus the interpretability signals of one window.
#[derive(Clone, Debug, PartialEq)]
pub struct ForecastResult {
    /// `[decoder_length, n_quantiles]`, minutes, monotone across quantiles.
    pub predictions: Tensor,
    /// `[decoder_length, encoder_length + decoder_length]`, head-averaged.
    pub attention: Tensor,
    pub static_weights: Vec<f64>,
    /// `[encoder_length, n_past]`.
    pub encoder_var_weights: Tensor,
    /// `[decoder_length, n_known]`.
    pub decoder_var_weights: Tensor,
}

/// A completed forward pass whose tape is still available for a backward sweep.
pub struct ForwardPass<'p> {
    pub graph: Graph<'p>,
    /// Unrepaired `[decoder_length, n_quantiles]` predictions on the tape.
    pub raw_predictions: Var,
    pub result: ForecastResult,
}

/// Sorts each row ascending so quantile forecasts never cross.
pub fn quantile_heads_monotonic_repair(raw: &Tensor) -> Tensor {
    let cols = raw.cols();
    let mut data = raw.data().to_vec();
    for row in data.chunks_mut(cols) {
        row.sort_by(f64::total_cmp);
    }
    Tensor::new(raw.shape().to_vec(), data).expect("sorting preserves shape and finiteness")
}

/// Full forward pass, keeping the tape.
pub fn forward_pass<'p>(
    window: &ForecastWindow,
    params: &'p ModelParams,
    config: &ModelConfig,
    mode: Mode,
    rng_seed: u64,
) -> Result<ForwardPass<'p>, ModelError> {
    config.validate()?;
    window.validate(config)?;
    let enc = config.encoder_length;
    let dec = config.decoder_length;
    let mut g = Graph::new(params, mode, config.dropout_rate, rng_seed);

    let statics = g.static_encode(&window.statics, config)?;

    let past = g.constant(window.past.clone())?;
    let known = g.constant(window.known.clone())?;
    let past_emb = g.embed_reals(past, config.n_past, "past.emb")?;
    let known_emb = g.embed_reals(known, config.n_known, "known.emb")?;
    let (past_sel, past_w) = g.variable_selection(&past_emb, Some(statics.selection), "vsn.past")?;
    let (known_sel, known_w) = g.variable_selection(&known_emb, Some(statics.selection), "vsn.known")?;

    let (enc_in, dec_in) = layer("temporal_inputs", || {
        let known_enc = g.tape.slice(known_sel, 0, 0, enc)?;
        let enc_in = g.tape.add(past_sel, known_enc)?;
        let dec_in = g.tape.slice(known_sel, 0, enc, dec)?;
        Ok((enc_in, dec_in))
    })?;

    let (enc_out, h_enc, c_enc) = g.lstm(enc_in, statics.hidden, statics.cell, "lstm.enc")?;
    let dec_out = if config.identity_decoder {
        dec_in
    } else {
        g.lstm(dec_in, h_enc, c_enc, "lstm.dec")?.0
    };

    let (lstm_out, lstm_in) = layer("temporal_concat", || {
        Ok((g.tape.concat(&[enc_out, dec_out], 0)?, g.tape.concat(&[enc_in, dec_in], 0)?))
    })?;
    let temporal = g.gate_add_norm(lstm_out, lstm_in, "post_lstm")?;
    let enriched = g.grn(temporal, Some(statics.enrichment), "enrich")?;

    let (attn_out, attention) = g.interpretable_attention(enriched, dec, config.num_attention_heads, "attn")?;
    let (enriched_dec, temporal_dec) = layer("decoder_slices", || {
        Ok((g.tape.slice(enriched, 0, enc, dec)?, g.tape.slice(temporal, 0, enc, dec)?))
    })?;
    let attended = g.gate_add_norm(attn_out, enriched_dec, "post_attn")?;
    let pointwise = g.grn(attended, None, "pos_wise")?;
    let fused = g.gate_add_norm(pointwise, temporal_dec, "pre_output")?;
    let head = g.linear(fused, "output")?;
    let raw = layer("output_scaling", || {
        let scaled = g.tape.scale(head, config.target_scale)?;
        let center = g.tape.constant(Tensor::scalar(config.target_center))?;
        g.tape.add(scaled, center)
    })?;

    let static_weights = g.tape.value(statics.weights).data().to_vec();
    let past_weights = g.tape.value(past_w).clone();
    let known_all = g.tape.value(known_w);
    let decoder_var_weights = Tensor::new(
        vec![dec, config.n_known],
        known_all.data()[enc * config.n_known..].to_vec(),
    )?;
    let result = ForecastResult {
        predictions: quantile_heads_monotonic_repair(g.tape.value(raw)),
        attention,
        static_weights,
        encoder_var_weights: past_weights,
        decoder_var_weights,
    };
    Ok(ForwardPass {
        graph: g,
        raw_predictions: raw,
        result,
    })
}

fn layer<T>(
    name: &str,
    f: impl FnOnce() -> Result<T, crate::tensor::TensorError>,
) -> Result<T, ModelError> {
    f().map_err(|source| ModelError::Layer {
        layer: name.to_string(),
        source,
    })
}

/// Forecast for one window. Inference mode is deterministic; in training
/// mode dropout masks are drawn from `rng_seed`.
pub fn forward(
    window: &ForecastWindow,
    params: &ModelParams,
    config: &ModelConfig,
    mode: Mode,
    rng_seed: u64,
) -> Result<ForecastResult, ModelError> {
    Ok(forward_pass(window, params, config, mode, rng_seed)?.result)
}
