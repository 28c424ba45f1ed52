use airdelay_core::ingest::*;
use airdelay_core::model::{ForecastWindow, ModelConfig, ModelParams};
use airdelay_core::tensor::Tensor;
use airdelay_core::training::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn table(n_days: usize) -> MasterTable {
    let data = synth_generate(&SynthConfig {
        n_airports: 2,
        n_days,
        ..SynthConfig::default()
    })
    .unwrap();
    let cfg = BuildConfig::new(data.config.airports(), data.config.start_date, n_days);
    build_master(&data.flights, &data.quarter_hours, &data.weather, &cfg).unwrap()
}

fn tiny_model() -> ModelConfig {
    table_model_config(&ModelConfig {
        hidden_size: 8,
        num_attention_heads: 2,
        dropout_rate: 0.1,
        ..ModelConfig::default()
    })
}

fn windows(t: &MasterTable, model: &mut ModelConfig, stride: usize) -> Vec<ForecastWindow> {
    let norm = Normalizer::fit(t).unwrap();
    norm.configure(model);
    make_windows(t, &norm, model, stride).unwrap().0
}

#[test]
fn window_counts_at_the_boundaries() {
    let t = table(1);
    let norm = Normalizer::fit(&t).unwrap();
    let model = tiny_model();
    let count = |len: i64| make_windows(&t.slice(t.start, t.start + len), &norm, &model, 1).unwrap();
    assert_eq!(count(96).0.len(), 2 * 73);
    assert_eq!(count(24).0.len(), 2);
    let (w, diag) = count(23);
    assert!(w.is_empty());
    assert_eq!(diag.short_series, t.airports);
}

#[test]
fn window_count_formula_matches_enumeration() {
    let t = table(2);
    let norm = Normalizer::fit(&t).unwrap();
    let model = tiny_model();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let len = rng.gen_range(0..192);
        let stride = rng.gen_range(1..6);
        let (w, _) = make_windows(&t.slice(t.start, t.start + len as i64), &norm, &model, stride).unwrap();
        assert_eq!(w.len(), 2 * window_count(len, 8, 16, stride), "len {len} stride {stride}");
    }
}

#[test]
fn windows_carry_targets_and_statics_from_the_table() {
    let t = table(1);
    let mut model = tiny_model();
    let w = windows(&t, &mut model, 1);
    let first = &w[0];
    let rows = t.series(0);
    assert_eq!(first.origin, rows[8].quarter);
    let want: Vec<f64> = rows[8..24].iter().map(|r| r.avg_arr_delay).collect();
    assert_eq!(first.target, want);
    assert_eq!(first.target_past.len(), 8);
    assert_eq!(first.statics.airport, t.airports[0].id().unwrap());
    assert_eq!(first.statics.local_hour, rows[8].local_hour as usize);
    for win in &w {
        win.validate(&model).unwrap();
    }
}

#[test]
fn standardized_train_inputs_have_zero_mean() {
    let t = table(2);
    let norm = Normalizer::fit(&t).unwrap();
    let rows = t.series(0);
    let m = &norm.past[&t.airports[0]];
    let z: Vec<f64> = rows.iter().map(|r| m[4].apply(past_values(r)[4])).collect();
    let mean = z.iter().sum::<f64>() / z.len() as f64;
    let var = z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / z.len() as f64;
    assert!(mean.abs() < 1e-9);
    assert!((var - 1.0).abs() < 1e-9);
    assert_eq!(Moments { mean: 3.0, std: 2.0 }.apply(None), 0.0);
}

#[test]
fn mae_examples() {
    let t = table(1);
    let mut model = tiny_model();
    let w = windows(&t, &mut model, 8);
    let exact: Vec<Vec<f64>> = w.iter().map(|w| w.target.clone()).collect();
    let r = mae_of(&w, &exact).unwrap();
    assert_eq!(r.overall, 0.0);
    assert!(r.per_airport.values().all(|&v| v == 0.0));
    let shifted: Vec<Vec<f64>> = exact.iter().map(|v| v.iter().map(|x| x + 5.0).collect()).collect();
    let r = mae_of(&w, &shifted).unwrap();
    assert!((r.overall - 5.0).abs() < 1e-12);
    assert!(r.per_horizon.iter().all(|&v| (v - 5.0).abs() < 1e-12));
    assert_eq!(r.per_horizon.len(), 16);
    assert!(mae_of(&[], &[]).is_err());
}

#[test]
fn baselines() {
    let t = table(3);
    let mut model = tiny_model();
    let w = windows(&t, &mut model, 5);
    let p = persistence_forecasts(&w);
    assert!(p.iter().zip(&w).all(|(f, w)| f.iter().all(|&v| v == w.target_past[7])));
    let (s, fallbacks) = seasonal_naive_forecasts(&t, &w);
    assert!(fallbacks > 0, "first-day windows lack a day of history");
    let late = w.iter().position(|w| w.origin - t.start >= 96).unwrap();
    let a = t.airports.iter().position(|c| c.id() == Some(w[late].statics.airport)).unwrap();
    let q = (w[late].origin - 96 - t.start) as usize;
    assert_eq!(s[late][0], t.row(a, q).avg_arr_delay);
}

#[test]
fn zero_learning_rate_leaves_parameters_unchanged() {
    let t = table(1);
    let mut model = tiny_model();
    let w = windows(&t, &mut model, 16);
    let cfg = TrainConfig {
        learning_rate: 0.0,
        max_epochs: 2,
        batch_size: 4,
        model: model.clone(),
        ..TrainConfig::default()
    };
    let init = ModelParams::init(&model, cfg.seed).unwrap();
    let (p, _) = train(&w, &w, &cfg).unwrap();
    assert_eq!(p, init);
}

#[test]
fn training_is_bit_reproducible_and_returns_best_epoch() {
    let t = table(2);
    let mut model = tiny_model();
    let w = windows(&t, &mut model, 12);
    let (tr, va) = w.split_at(w.len() * 3 / 4);
    let cfg = TrainConfig {
        learning_rate: 0.02,
        max_epochs: 6,
        batch_size: 8,
        patience: 2,
        seed: 9,
        model: model.clone(),
        ..TrainConfig::default()
    };
    let (p1, h1) = train(tr, va, &cfg).unwrap();
    let (p2, h2) = train(tr, va, &cfg).unwrap();
    assert_eq!(p1, p2);
    assert_eq!(h1.losses(), h2.losses());
    assert_eq!(h1.best_epoch, h2.best_epoch);

    let best = h1.epochs.iter().map(|e| e.val_loss).fold(f64::INFINITY, f64::min);
    assert_eq!(h1.best_val_loss(), Some(best));
    assert!(h1.epochs.len() <= h1.best_epoch + 1 + cfg.patience);
    // the returned parameters are the ones scored at the best epoch
    assert_eq!(dataset_loss(&p1, &model, va).unwrap(), best);
}

#[test]
fn training_reduces_loss() {
    let t = table(2);
    let mut model = tiny_model();
    let w = windows(&t, &mut model, 6);
    let cfg = TrainConfig {
        learning_rate: 0.01,
        max_epochs: 5,
        batch_size: 16,
        model: model.clone(),
        ..TrainConfig::default()
    };
    let (_, h) = train(&w, &w, &cfg).unwrap();
    assert!(h.epochs.last().unwrap().train_loss < h.epochs[0].train_loss);
}

#[test]
fn metrics_csv_header() {
    let h = TrainHistory {
        epochs: vec![EpochRecord {
            epoch: 0,
            train_loss: 1.5,
            val_loss: 2.0,
            seconds: 0.25,
        }],
        best_epoch: 0,
    };
    let mut buf = Vec::new();
    h.write_csv(&mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap(), "epoch,train_loss,val_loss\n0,1.5,2.0\n");
}

#[test]
fn train_config_toml() {
    let cfg = TrainConfig::from_toml("learning_rate = 0.005\nbatch_size = 32\n[model]\nhidden_size = 16\n").unwrap();
    assert_eq!(cfg.learning_rate, 0.005);
    assert_eq!(cfg.batch_size, 32);
    assert_eq!(cfg.model.hidden_size, 16);
    assert_eq!(cfg.patience, TrainConfig::default().patience);
    assert_eq!(TrainConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    assert!(TrainConfig::from_toml("learning_rat = 1").is_err());
    assert!(TrainConfig::from_toml("learning_rate = -1").is_err());
    assert!(TrainConfig::from_toml("patience = 0").is_err());
}

#[test]
fn empty_window_sets_are_rejected() {
    let model = tiny_model();
    let cfg = TrainConfig {
        model,
        ..TrainConfig::default()
    };
    assert!(matches!(train(&[], &[], &cfg), Err(TrainError::Data(_))));
}

fn pred(h: usize, q: usize, v: Vec<f64>) -> Tensor {
    Tensor::new(vec![h, q], v).unwrap()
}

proptest! {
    #[test]
    fn pinball_properties(
        y in proptest::collection::vec(-50.0f64..50.0, 1..8),
        noise in proptest::collection::vec(-20.0f64..20.0, 24),
    ) {
        let h = y.len();
        let q = [0.1, 0.5, 0.9];
        let p: Vec<f64> = (0..h * 3).map(|i| y[i / 3] + noise[i % 24]).collect();
        let l = quantile_loss(&pred(h, 3, p.clone()), &y, &q).unwrap();
        prop_assert!(l >= 0.0);
        prop_assert_eq!(l == 0.0, p.iter().enumerate().all(|(i, v)| *v == y[i / 3]));

        let med: Vec<f64> = (0..h).map(|t| y[t] + noise[t]).collect();
        let l5 = quantile_loss(&pred(h, 1, med.clone()), &y, &[0.5]).unwrap();
        let mae = med.iter().zip(&y).map(|(a, b)| (a - b).abs()).sum::<f64>() / h as f64;
        prop_assert_eq!(l5, 0.5 * mae);
    }

    #[test]
    fn pinball_is_linear_in_q(r in -30.0f64..30.0) {
        prop_assume!(r.abs() > 1e-9);
        // the loss is q·r for r > 0 and (q − 1)·r for r < 0
        for q in [0.1, 0.5, 0.9] {
            let want = if r > 0.0 { q * r } else { (q - 1.0) * r };
            prop_assert!((pinball(r, q) - want).abs() < 1e-12);
            let slope = (pinball(r, q + 1e-3) - pinball(r, q)) / 1e-3;
            prop_assert!((slope - r).abs() < 1e-6);
        }
    }
}
