use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use super::TrainError;
use crate::airports::{code_of, AirportCode};
use crate::clock::{format_utc, quarter_start, QUARTERS_PER_DAY};
use crate::ingest::MasterTable;
use crate::model::{forward, ForecastResult, ForecastWindow, Mode, ModelConfig, ModelParams};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MaeReport {
    /// Mean over all windows and horizons.
    pub overall: f64,
    pub per_airport: BTreeMap<AirportCode, f64>,
    /// Index 0 is horizon +1.
    pub per_horizon: Vec<f64>,
    pub n_windows: usize,
}

impl MaeReport {
    /// `scope,key,mae` rows: `overall,all`, one `airport,<code>` per airport
    /// and one `horizon,<h>` per horizon.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["scope", "key", "mae"])?;
        w.write_record(["overall".to_string(), "all".to_string(), self.overall.to_string()])?;
        for (code, v) in &self.per_airport {
            w.write_record(["airport".to_string(), code.to_string(), v.to_string()])?;
        }
        for (h, v) in self.per_horizon.iter().enumerate() {
            w.write_record(["horizon".to_string(), (h + 1).to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// MAE of point forecasts (one `Vec` per window, one value per horizon).
pub fn mae_of(windows: &[ForecastWindow], forecasts: &[Vec<f64>]) -> Result<MaeReport, TrainError> {
    if windows.is_empty() {
        return Err(TrainError::Data("no windows to evaluate".into()));
    }
    if windows.len() != forecasts.len() {
        return Err(TrainError::Shape(format!("{} windows, {} forecasts", windows.len(), forecasts.len())));
    }
    let h = windows[0].target.len();
    let mut per_h = vec![0.0; h];
    let mut per_a: BTreeMap<AirportCode, (f64, usize)> = BTreeMap::new();
    for (w, f) in windows.iter().zip(forecasts) {
        if w.target.len() != h || f.len() != h {
            return Err(TrainError::Shape("horizon lengths differ between windows".into()));
        }
        let entry = per_a.entry(code_of(w.statics.airport)).or_default();
        for (k, (y, p)) in w.target.iter().zip(f).enumerate() {
            let e = (y - p).abs();
            per_h[k] += e;
            entry.0 += e;
        }
        entry.1 += h;
    }
    let n = windows.len() as f64;
    let per_horizon: Vec<f64> = per_h.iter().map(|s| s / n).collect();
    Ok(MaeReport {
        overall: per_horizon.iter().sum::<f64>() / h as f64,
        per_airport: per_a.into_iter().map(|(k, (s, c))| (k, s / c as f64)).collect(),
        per_horizon,
        n_windows: windows.len(),
    })
}

pub fn predict(params: &ModelParams, config: &ModelConfig, windows: &[ForecastWindow]) -> Result<Vec<ForecastResult>, TrainError> {
    windows
        .iter()
        .map(|w| forward(w, params, config, Mode::Infer, 0).map_err(TrainError::from))
        .collect()
}

pub fn median_forecasts(results: &[ForecastResult], config: &ModelConfig) -> Vec<Vec<f64>> {
    let m = config.median_index().expect("validated configs include the median");
    results
        .iter()
        .map(|r| (0..r.predictions.rows()).map(|t| r.predictions.at2(t, m)).collect())
        .collect()
}

/// MAE of the median quantile forecast.
pub fn evaluate_mae(params: &ModelParams, config: &ModelConfig, windows: &[ForecastWindow]) -> Result<MaeReport, TrainError> {
    let results = predict(params, config, windows)?;
    mae_of(windows, &median_forecasts(&results, config))
}

/// Last observed delay repeated over every horizon.
pub fn persistence_forecasts(windows: &[ForecastWindow]) -> Vec<Vec<f64>> {
    windows
        .iter()
        .map(|w| vec![*w.target_past.last().unwrap_or(&0.0); w.target.len()])
        .collect()
}

/// The delay observed 96 quarters before each target step, looked up in the
/// full table. Steps without a day of history fall back to persistence; the
/// count of such steps is returned alongside.
pub fn seasonal_naive_forecasts(table: &MasterTable, windows: &[ForecastWindow]) -> (Vec<Vec<f64>>, usize) {
    let index: BTreeMap<usize, usize> = table
        .airports
        .iter()
        .enumerate()
        .filter_map(|(i, c)| c.id().map(|id| (id, i)))
        .collect();
    let mut fallbacks = 0;
    let out = windows
        .iter()
        .map(|w| {
            let last = *w.target_past.last().unwrap_or(&0.0);
            (0..w.target.len())
                .map(|k| {
                    let q = w.origin + k as i64 - QUARTERS_PER_DAY;
                    match index.get(&w.statics.airport) {
                        Some(&a) if q >= table.start && q < table.end() => table.row(a, (q - table.start) as usize).avg_arr_delay,
                        _ => {
                            fallbacks += 1;
                            last
                        }
                    }
                })
                .collect()
        })
        .collect();
    (out, fallbacks)
}

/// `airport,origin_quarter,horizon,q10,q50,q90` with one row per window and
/// horizon; quantile columns follow `config.quantiles`.
pub fn write_forecasts_csv<W: Write>(
    windows: &[ForecastWindow],
    results: &[ForecastResult],
    config: &ModelConfig,
    out: W,
) -> Result<(), TrainError> {
    if windows.len() != results.len() {
        return Err(TrainError::Shape(format!("{} windows, {} results", windows.len(), results.len())));
    }
    let io = |e: csv::Error| TrainError::Io("forecasts".into(), e.into());
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["airport".to_string(), "origin_quarter".into(), "horizon".into()];
    header.extend(config.quantiles.iter().map(|q| format!("q{}", (q * 100.0).round())));
    w.write_record(&header).map_err(io)?;
    for (win, r) in windows.iter().zip(results) {
        let code = code_of(win.statics.airport).to_string();
        let origin = format_utc(quarter_start(win.origin));
        for (h, row) in r.predictions.data().chunks(r.predictions.cols()).enumerate() {
            let mut rec = vec![code.clone(), origin.clone(), (h + 1).to_string()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec).map_err(io)?;
        }
    }
    w.flush().map_err(|e| TrainError::Io("forecasts".into(), e))?;
    Ok(())
}
