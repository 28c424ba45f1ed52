#![allow(dead_code)]

pub mod oracles;

use airdelay_core::model::{ForecastWindow, ModelConfig, StaticCodes};
use airdelay_core::tensor::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn small_config() -> ModelConfig {
    ModelConfig {
        hidden_size: 8,
        num_attention_heads: 2,
        dropout_rate: 0.1,
        encoder_length: 4,
        decoder_length: 4,
        n_past: 2,
        n_known: 3,
        ..ModelConfig::default()
    }
}

pub fn random_window(config: &ModelConfig, seed: u64) -> ForecastWindow {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let [a, m, h, d] = config.static_cardinalities;
    let statics = StaticCodes {
        airport: rng.gen_range(0..a),
        month: rng.gen_range(0..m),
        local_hour: rng.gen_range(0..h),
        day_of_week: rng.gen_range(0..d),
    };
    let enc = config.encoder_length;
    let total = config.total_length();
    let past: Vec<f64> = (0..enc * config.n_past).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let known: Vec<f64> = (0..total * config.n_known).map(|_| rng.gen_range(-2.0..2.0)).collect();
    ForecastWindow {
        statics,
        origin: 0,
        past: Tensor::new(vec![enc, config.n_past], past).unwrap(),
        known: Tensor::new(vec![total, config.n_known], known).unwrap(),
        target_past: (0..enc).map(|_| rng.gen_range(0.0..30.0)).collect(),
        target: (0..config.decoder_length).map(|_| rng.gen_range(0.0..30.0)).collect(),
    }
}

/// Row-major matrix product used by hand-rolled oracles.
pub fn matmul(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        for j in 0..n {
            out[i * n + j] = (0..k).map(|p| a[i * k + p] * b[p * n + j]).sum();
        }
    }
    out
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn elu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        x.exp() - 1.0
    }
}

pub fn layer_norm(x: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    x.iter().map(|v| (v - mean) / (var + 1e-5).sqrt()).collect()
}

pub fn random_tensor(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
    let n: usize = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

/// Central difference with one Richardson extrapolation step:
/// `(4·D(h/2) − D(h)) / 3`, which cancels the O(h²) truncation term and
/// lets a larger step keep round-off small.
pub fn richardson_central_difference(f: impl Fn(f64) -> f64, h: f64) -> f64 {
    let d = |s: f64| (f(s) - f(-s)) / (2.0 * s);
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}
