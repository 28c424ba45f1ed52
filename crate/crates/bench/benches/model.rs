use airdelay_core::model::{forward, ForecastWindow, Mode, ModelConfig, ModelParams, StaticCodes};
use airdelay_core::tensor::Tensor;
use airdelay_core::training::{quantile_loss, window_gradients};
use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn window(config: &ModelConfig, seed: u64) -> ForecastWindow {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (enc, total) = (config.encoder_length, config.total_length());
    let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect() };
    ForecastWindow {
        statics: StaticCodes {
            airport: 3,
            month: 6,
            local_hour: 17,
            day_of_week: 2,
        },
        origin: 0,
        past: Tensor::new(vec![enc, config.n_past], draw(enc * config.n_past)).unwrap(),
        known: Tensor::new(vec![total, config.n_known], draw(total * config.n_known)).unwrap(),
        target_past: draw(enc),
        target: draw(config.decoder_length),
    }
}

fn bench_model(c: &mut Criterion) {
    let mut g = c.benchmark_group("tft");
    for hidden in [8, 16, 32] {
        let config = ModelConfig {
            hidden_size: hidden,
            ..ModelConfig::default()
        };
        let params = ModelParams::init(&config, 1).unwrap();
        let w = window(&config, 2);
        g.bench_with_input(BenchmarkId::new("forward", hidden), &hidden, |b, _| {
            b.iter(|| {
                let r = forward(black_box(&w), &params, &config, Mode::Infer, 0).unwrap();
                quantile_loss(&r.predictions, &w.target, &config.quantiles).unwrap()
            })
        });
        g.bench_with_input(BenchmarkId::new("forward_backward", hidden), &hidden, |b, _| {
            b.iter(|| window_gradients(black_box(&w), &params, &config, 7).unwrap().0)
        });
    }
    g.finish();
}

criterion_group!(benches, bench_model);
criterion_main!(benches);
