use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use airdelay_core::airports::AirportCode;
use airdelay_core::clock::{parse_utc, quarter_start, to_datetime, QUARTER_MINUTES};
use airdelay_core::features::{
    great_circle_track, traffic_density, weather_grid, write_grid_csv, LatLon, StationObs, TrackPoint,
};
use airdelay_core::ingest::*;
use airdelay_core::interpret::{attention_by_lag, variable_importance, write_importance_csv, VariableNames};
use airdelay_core::model::{load_checkpoint, write_checkpoint, ForecastResult, ForecastWindow, ModelConfig, ModelParams};
use airdelay_core::training::*;
use anyhow::{Context, Result};
use serde::de::DeserializeOwned;

use crate::config::{overlay, RunConfig, SplitDays};
use crate::errors::{coded, Code};
use crate::manifest::{write_atomic, RunManifest};
use crate::{Cli, Command, FeaturesArgs, IngestArgs, ModelArgs, PlotArgs, SplitName, SynthArgs, TrainArgs};

const CHECKPOINT: &str = "model.ckpt";
const NORMALIZER: &str = "normalizer.json";
const SPLIT: &str = "split.json";

pub fn run(cli: Cli) -> Result<()> {
    let file = cli.config.as_deref();
    let cfg = RunConfig::load(file)?;
    match cli.command {
        Command::Synth(a) => synth(a, cfg, file),
        Command::Ingest(a) => ingest(a, cfg, file),
        Command::Features(a) => features(a, file),
        Command::Train(a) => train_cmd(a, cfg, file),
        Command::Predict(a) => predict_cmd(a, file),
        Command::Evaluate(a) => evaluate(a, file),
        Command::Interpret(a) => interpret(a, file),
        Command::PlotData(a) => plot_data(a, file),
    }
}

fn ensure_dir(p: &Path) -> Result<()> {
    std::fs::create_dir_all(p).map_err(|e| coded(Code::Io, format!("creating {}: {e}", p.display())))
}

fn require_file(p: &Path) -> Result<()> {
    if p.is_file() {
        Ok(())
    } else {
        Err(coded(Code::Input, format!("input file {} not found", p.display())))
    }
}

fn write_output(m: &mut RunManifest, path: PathBuf, bytes: &[u8]) -> Result<()> {
    write_atomic(&path, bytes)?;
    m.outputs.push(path.display().to_string());
    Ok(())
}

fn csv_output(m: &mut RunManifest, path: PathBuf, f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
    let mut buf = Vec::new();
    f(&mut buf).with_context(|| format!("formatting {}", path.display()))?;
    write_output(m, path, &buf)
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    require_file(path)?;
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn load_master(path: &Path) -> Result<MasterTable> {
    require_file(path)?;
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let table = read_master_csv(std::io::BufReader::new(file)).with_context(|| format!("reading {}", path.display()))?;
    table.validate()?;
    Ok(table)
}

fn synth(a: SynthArgs, cfg: RunConfig, file: Option<&Path>) -> Result<()> {
    let (mut m, t0) = RunManifest::start("synth", file);
    let mut sc = cfg.synth;
    overlay(&mut sc.n_airports, a.airports);
    overlay(&mut sc.n_days, a.days);
    overlay(&mut sc.seed, a.seed);
    overlay(&mut sc.start_date, a.start);
    overlay(&mut sc.missing_rate, a.missing_rate);
    sc.validate()?;
    let data = synth_generate(&sc)?;
    ensure_dir(&a.out)?;
    write_synth(&data, &a.out)?;
    for name in ["flights.csv", "airport_qh.csv", "weather.csv", "oracle.csv"] {
        m.outputs.push(a.out.join(name).display().to_string());
    }
    m.seed = Some(sc.seed);
    m.set_config(&sc)?;
    eprintln!(
        "synth: {} flights, {} quarter-hour rows, {} weather reports",
        data.flights.len(),
        data.quarter_hours.len(),
        data.weather.len()
    );
    m.finish(&a.out, t0)?;
    Ok(())
}

fn date_of_quarter(q: i64) -> chrono::NaiveDate {
    to_datetime(quarter_start(q)).date()
}

fn ingest(a: IngestArgs, cfg: RunConfig, file: Option<&Path>) -> Result<()> {
    let (mut m, t0) = RunManifest::start("ingest", file);
    let paths = ["flights.csv", "airport_qh.csv", "weather.csv"].map(|n| a.data.join(n));
    for p in &paths {
        require_file(p)?;
        m.input(p);
    }
    let flights = parse_flights(&paths[0])?;
    let qh = parse_quarter_hours(&paths[1])?;
    let weather = parse_weather(&paths[2])?;

    let airports = match &a.airports {
        Some(codes) => codes
            .iter()
            .map(|c| AirportCode::new(c.trim()).ok_or_else(|| coded(Code::Config, format!("invalid airport code {c:?}"))))
            .collect::<Result<Vec<_>>>()?,
        None => {
            let mut set: Vec<AirportCode> = qh.records.iter().map(|r| r.airport).collect::<BTreeSet<_>>().into_iter().collect();
            set.sort_by_key(|c| (c.id().unwrap_or(usize::MAX), *c));
            set
        }
    };
    let quarters = qh.records.iter().map(|r| r.quarter);
    let span = quarters.clone().min().zip(quarters.max());
    let start = match (a.start, span) {
        (Some(s), _) => s,
        (None, Some((lo, _))) => date_of_quarter(lo),
        (None, None) => return Err(coded(Code::Data, "airport_qh.csv has no rows; pass --start and --days")),
    };
    let days = match (a.days, span) {
        (Some(d), _) => d,
        (None, Some((_, hi))) => {
            let n = (date_of_quarter(hi) - start).num_days() + 1;
            usize::try_from(n).map_err(|_| coded(Code::Config, "--start lies after the last quarter-hour record"))?
        }
        (None, None) => return Err(coded(Code::Data, "airport_qh.csv has no rows; pass --start and --days")),
    };
    if airports.is_empty() {
        return Err(coded(Code::Data, "no airports given and airport_qh.csv has no rows"));
    }
    let mut bc = BuildConfig::new(airports, start, days);
    overlay(&mut bc.missing_threshold, cfg.ingest.missing_threshold);
    overlay(&mut bc.missing_threshold, a.missing_threshold);
    overlay(&mut bc.max_fill_gap, cfg.ingest.max_fill_gap);
    overlay(&mut bc.max_fill_gap, a.max_fill_gap);

    let table = build_master(&flights.records, &qh.records, &weather.records, &bc)?;
    table.validate()?;
    ensure_dir(&a.out)?;
    csv_output(&mut m, a.out.join("master.csv"), |buf| Ok(write_master_csv(&table, buf)?))?;
    let rejects: Vec<&Reject> = flights.rejects.iter().chain(&qh.rejects).chain(&weather.rejects).collect();
    csv_output(&mut m, a.out.join("rejects.csv"), |buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(["source", "line", "reason"])?;
        for r in &rejects {
            w.write_record([r.source.clone(), r.line.to_string(), r.reason.clone()])?;
        }
        w.flush()?;
        Ok(())
    })?;
    m.set_config(&bc)?;
    m.notes.push(format!("rejected rows: {}", rejects.len()));
    m.notes.push(format!("diagnostics: {}", serde_json::to_string(&table.diagnostics)?));
    eprintln!("ingest: {} rows for {} airports, {} rejected input rows", table.len(), table.airports.len(), rejects.len());
    m.finish(&a.out, t0)?;
    Ok(())
}

fn features(a: FeaturesArgs, file: Option<&Path>) -> Result<()> {
    let (mut m, t0) = RunManifest::start("features", file);
    let at = parse_utc(&a.at).map_err(|e| coded(Code::Input, format!("--at {}: {e}", a.at)))?;
    if at.rem_euclid(QUARTER_MINUTES) != 0 {
        return Err(coded(Code::Input, format!("--at {} is not on a quarter-hour boundary", a.at)));
    }
    let fpath = a.data.join("flights.csv");
    let wpath = a.data.join("weather.csv");
    for p in [&fpath, &wpath] {
        require_file(p)?;
        m.input(p);
    }
    let flights = parse_flights(&fpath)?.records;
    let tracks: Vec<Vec<TrackPoint>> = flights
        .iter()
        .filter_map(|f| {
            let (off, on) = (f.act_off?, f.act_on?);
            if !(off < at && at < on) {
                return None;
            }
            let (o, d) = (f.origin.info()?, f.dest.info()?);
            great_circle_track(LatLon::new(o.lat, o.lon), LatLon::new(d.lat, d.lon), off, on, QUARTER_MINUTES).ok()
        })
        .collect();
    let density = traffic_density(tracks.iter().map(Vec::as_slice), at);
    ensure_dir(&a.out)?;
    csv_output(&mut m, a.out.join("density_grid.csv"), |buf| Ok(write_grid_csv(&density.grid, buf)?))?;
    m.notes.push(format!("airborne flights: {}, outside grid: {}", tracks.len(), density.skipped));

    let hour = at.div_euclid(60);
    let obs: Vec<StationObs> = parse_weather(&wpath)?
        .records
        .iter()
        .filter(|w| w.utc_hour == hour)
        .map(|w| StationObs {
            pos: LatLon::new(w.lat, w.lon),
            weight: w.convective_weight,
        })
        .collect();
    if obs.is_empty() {
        m.notes.push("no weather reports in this hour; weather_grid.csv not written".into());
        eprintln!("features: no weather reports in hour {}; skipping weather grid", a.at);
    } else {
        let grid = weather_grid(&obs)?;
        csv_output(&mut m, a.out.join("weather_grid.csv"), |buf| Ok(write_grid_csv(&grid, buf)?))?;
    }
    m.set_config(&serde_json::json!({ "at": a.at }))?;
    m.finish(&a.out, t0)?;
    Ok(())
}

fn split_spec(table: &MasterTable, file: SplitDays, val: Option<usize>, test: Option<usize>) -> Result<SplitSpec> {
    let default = SplitSpec::default_for(table)?;
    let val = val.or(file.validation_days);
    let test = test.or(file.test_days);
    if val.is_none() && test.is_none() {
        return Ok(default);
    }
    let n_days = table.n_quarters / 96;
    let val = val.unwrap_or(default.validation.days() as usize);
    let test = test.unwrap_or(default.test.days() as usize);
    let spec = SplitSpec::tail(date_of_quarter(table.start), n_days, val, test)?;
    Ok(spec)
}

fn train_cmd(a: TrainArgs, cfg: RunConfig, file: Option<&Path>) -> Result<()> {
    let (mut m, t0) = RunManifest::start("train", file);
    let mut tc = cfg.train;
    overlay(&mut tc.max_epochs, a.epochs);
    overlay(&mut tc.learning_rate, a.learning_rate);
    overlay(&mut tc.batch_size, a.batch_size);
    overlay(&mut tc.patience, a.patience);
    overlay(&mut tc.seed, a.seed);
    overlay(&mut tc.window_stride, a.stride);
    overlay(&mut tc.model.hidden_size, a.hidden_size);
    overlay(&mut tc.model.num_attention_heads, a.heads);
    overlay(&mut tc.model.dropout_rate, a.dropout);
    tc.model.validate()?;
    tc.validate()?;

    let table = load_master(&a.master)?;
    m.input(&a.master);
    let spec = split_spec(&table, cfg.split, a.validation_days, a.test_days)?;
    let [tr, va, _] = split(&table, &spec)?;
    let norm = Normalizer::fit(&tr)?;
    let mut model = table_model_config(&tc.model);
    norm.configure(&mut model);
    tc.model = model.clone();
    let (train_w, diag) = make_windows(&tr, &norm, &model, tc.window_stride)?;
    let (val_w, _) = make_windows(&va, &norm, &model, tc.window_stride)?;
    if train_w.is_empty() || val_w.is_empty() {
        return Err(coded(
            Code::Data,
            format!(
                "{} training and {} validation windows; each split needs at least {} quarters per airport",
                train_w.len(),
                val_w.len(),
                model.total_length()
            ),
        ));
    }
    eprintln!("train: {} training windows, {} validation windows", train_w.len(), val_w.len());
    let init = ModelParams::init(&model, tc.seed)?;
    let (params, history) = train_from(init, &train_w, &val_w, &tc, |e| {
        eprintln!(
            "epoch {:>3}  train {:.4}  val {:.4}  ({:.1}s)",
            e.epoch, e.train_loss, e.val_loss, e.seconds
        )
    })?;

    ensure_dir(&a.out)?;
    let mut ckpt = Vec::new();
    write_checkpoint(&mut ckpt, &model, &params)?;
    write_output(&mut m, a.out.join(CHECKPOINT), &ckpt)?;
    write_output(&mut m, a.out.join(NORMALIZER), &serde_json::to_vec_pretty(&norm)?)?;
    write_output(&mut m, a.out.join(SPLIT), &serde_json::to_vec_pretty(&spec)?)?;
    write_output(&mut m, a.out.join("train_config.toml"), tc.to_toml().as_bytes())?;
    csv_output(&mut m, a.out.join("metrics.csv"), |buf| Ok(history.write_csv(buf)?))?;
    m.seed = Some(tc.seed);
    m.set_config(&tc)?;
    m.notes.push(format!("best epoch {}", history.best_epoch));
    if !diag.short_series.is_empty() {
        let codes: Vec<String> = diag.short_series.iter().map(ToString::to_string).collect();
        m.notes.push(format!("series shorter than one window: {}", codes.join(" ")));
    }
    let secs: Vec<String> = history.epochs.iter().map(|e| format!("{:.2}", e.seconds)).collect();
    m.notes.push(format!("epoch seconds: {}", secs.join(" ")));
    m.finish(&a.out, t0)?;
    Ok(())
}

struct Loaded {
    table: MasterTable,
    model: ModelConfig,
    params: ModelParams,
    windows: Vec<ForecastWindow>,
}

fn load_model_inputs(a: &ModelArgs, m: &mut RunManifest) -> Result<Loaded> {
    let table = load_master(&a.master)?;
    m.input(&a.master);
    let ckpt = a.model.join(CHECKPOINT);
    require_file(&ckpt)?;
    m.input(&ckpt);
    let (model, params) = load_checkpoint(&ckpt).with_context(|| format!("loading {}", ckpt.display()))?;
    let norm: Normalizer = read_json(&a.model.join(NORMALIZER))?;
    let spec: SplitSpec = read_json(&a.model.join(SPLIT))?;
    let part = match a.split {
        SplitName::All => table.clone(),
        s => {
            let [tr, va, te] = split(&table, &spec)?;
            match s {
                SplitName::Train => tr,
                SplitName::Validation => va,
                _ => te,
            }
        }
    };
    let windows = make_windows(&part, &norm, &model, 1)?.0;
    if windows.is_empty() {
        return Err(coded(Code::Data, format!("the {:?} split has no complete forecast windows", a.split)));
    }
    m.set_config(&serde_json::json!({ "split": format!("{:?}", a.split).to_lowercase(), "model": &model }))?;
    Ok(Loaded {
        table,
        model,
        params,
        windows,
    })
}

fn predict_cmd(a: ModelArgs, file: Option<&Path>) -> Result<()> {
    let (mut m, t0) = RunManifest::start("predict", file);
    let l = load_model_inputs(&a, &mut m)?;
    let results = predict(&l.params, &l.model, &l.windows)?;
    ensure_dir(&a.out)?;
    csv_output(&mut m, a.out.join("forecasts.csv"), |buf| {
        Ok(write_forecasts_csv(&l.windows, &results, &l.model, buf)?)
    })?;
    eprintln!("predict: {} windows", l.windows.len());
    m.finish(&a.out, t0)?;
    Ok(())
}

fn evaluate(a: ModelArgs, file: Option<&Path>) -> Result<()> {
    let (mut m, t0) = RunManifest::start("evaluate", file);
    let l = load_model_inputs(&a, &mut m)?;
    let results = predict(&l.params, &l.model, &l.windows)?;
    let model_mae = mae_of(&l.windows, &median_forecasts(&results, &l.model))?;
    let persistence = mae_of(&l.windows, &persistence_forecasts(&l.windows))?;
    let (seasonal, fallback) = seasonal_naive_forecasts(&l.table, &l.windows);
    let seasonal = mae_of(&l.windows, &seasonal)?;
    ensure_dir(&a.out)?;
    for (name, report) in [
        ("mae.csv", &model_mae),
        ("mae_persistence.csv", &persistence),
        ("mae_seasonal_naive.csv", &seasonal),
    ] {
        csv_output(&mut m, a.out.join(name), |buf| Ok(report.write_csv(buf)?))?;
    }
    m.notes.push(format!("seasonal-naive steps without a day of history: {fallback}"));
    eprintln!(
        "evaluate: {} windows, MAE model {:.3}, persistence {:.3}, seasonal-naive {:.3}",
        l.windows.len(),
        model_mae.overall,
        persistence.overall,
        seasonal.overall
    );
    m.finish(&a.out, t0)?;
    Ok(())
}

fn interpret(a: ModelArgs, file: Option<&Path>) -> Result<()> {
    let (mut m, t0) = RunManifest::start("interpret", file);
    let l = load_model_inputs(&a, &mut m)?;
    let results = predict(&l.params, &l.model, &l.windows)?;
    let profile = attention_by_lag(&results)?;
    let names = VariableNames {
        static_vars: &STATIC_VARIABLES,
        encoder: &PAST_VARIABLES,
        decoder: &KNOWN_VARIABLES,
    };
    let report = variable_importance(&results, &names)?;
    ensure_dir(&a.out)?;
    csv_output(&mut m, a.out.join("attention_profile.csv"), |buf| Ok(profile.write_csv(buf)?))?;
    for (group, ranked) in [
        ("static", &report.static_vars),
        ("encoder", &report.encoder),
        ("decoder", &report.decoder),
    ] {
        csv_output(&mut m, a.out.join(format!("importance_{group}.csv")), |buf| {
            Ok(write_importance_csv(ranked, buf)?)
        })?;
    }
    m.finish(&a.out, t0)?;
    Ok(())
}

fn quantile_label(q: f64) -> String {
    format!("q{}", (q * 100.0).round())
}

fn plot_rows(windows: &[ForecastWindow], results: &[ForecastResult], config: &ModelConfig, h: usize, buf: &mut Vec<u8>) -> Result<()> {
    let mut w = csv::Writer::from_writer(buf);
    w.write_record(["airport", "utc_quarter", "horizon", "series", "value"])?;
    let labels: Vec<String> = config.quantiles.iter().map(|&q| quantile_label(q)).collect();
    for (win, r) in windows.iter().zip(results) {
        let code = airdelay_core::airports::code_of(win.statics.airport).to_string();
        let when = airdelay_core::clock::format_utc(quarter_start(win.origin + h as i64 - 1));
        let mut emit = |series: &str, v: f64| w.write_record([&code, &when, &h.to_string(), series, &v.to_string()]);
        emit("actual", win.target[h - 1])?;
        for (k, label) in labels.iter().enumerate() {
            emit(label, r.predictions.at2(h - 1, k))?;
        }
    }
    w.flush()?;
    Ok(())
}

fn plot_data(a: PlotArgs, file: Option<&Path>) -> Result<()> {
    let (mut m, t0) = RunManifest::start("plot-data", file);
    let l = load_model_inputs(&a.model, &mut m)?;
    if a.horizon == 0 || a.horizon > l.model.decoder_length {
        return Err(coded(
            Code::Config,
            format!("--horizon {} outside 1..={}", a.horizon, l.model.decoder_length),
        ));
    }
    let results = predict(&l.params, &l.model, &l.windows)?;
    ensure_dir(&a.model.out)?;
    csv_output(&mut m, a.model.out.join("actual_vs_predicted.csv"), |buf| {
        plot_rows(&l.windows, &results, &l.model, a.horizon, buf)
    })?;
    m.finish(&a.model.out, t0)?;
    Ok(())
}
