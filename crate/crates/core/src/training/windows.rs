use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::TrainError;
use crate::airports::AirportCode;
use crate::ingest::{FeatureRow, MasterTable};
use crate::model::{ForecastWindow, ModelConfig, StaticCodes};
use crate::tensor::Tensor;

pub const PAST_VARIABLES: [&str; 10] = [
    "throughput_arr",
    "throughput_dep",
    "demand_arr",
    "demand_dep",
    "avg_arr_delay",
    "avg_dep_delay",
    "ontime_arr_pct",
    "ontime_dep_pct",
    "queue_arr",
    "queue_dep",
];

pub const KNOWN_VARIABLES: [&str; 12] = [
    "sched_arr",
    "sched_dep",
    "capacity_arr",
    "capacity_dep",
    "visibility_sm",
    "ceiling_ft",
    "arr_headwind",
    "arr_crosswind",
    "dep_headwind",
    "dep_crosswind",
    "enroute_weather",
    "enroute_density",
];

pub const STATIC_VARIABLES: [&str; 4] = ["airport", "month", "local_hour", "day_of_week"];

pub fn past_values(r: &FeatureRow) -> [Option<f64>; 10] {
    [
        Some(r.throughput_arr),
        Some(r.throughput_dep),
        Some(r.demand_arr),
        Some(r.demand_dep),
        Some(r.avg_arr_delay),
        Some(r.avg_dep_delay),
        r.ontime_arr_pct,
        r.ontime_dep_pct,
        Some(r.queue_arr),
        Some(r.queue_dep),
    ]
}

pub fn known_values(r: &FeatureRow) -> [Option<f64>; 12] {
    [
        Some(r.sched_arr),
        Some(r.sched_dep),
        r.capacity_arr,
        r.capacity_dep,
        r.visibility_sm,
        r.ceiling_ft,
        r.arr_headwind,
        r.arr_crosswind,
        r.dep_headwind,
        r.dep_crosswind,
        r.enroute_weather,
        Some(r.enroute_density),
    ]
}

/// Model configuration sized for the master-table variables.
pub fn table_model_config(base: &ModelConfig) -> ModelConfig {
    ModelConfig {
        n_past: PAST_VARIABLES.len(),
        n_known: KNOWN_VARIABLES.len(),
        static_cardinalities: [crate::airports::AIRPORTS.len(), 12, 24, 7],
        ..base.clone()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub std: f64,
}

impl Moments {
    fn from_values(values: impl Iterator<Item = f64>) -> Self {
        let v: Vec<f64> = values.collect();
        if v.is_empty() {
            return Self { mean: 0.0, std: 1.0 };
        }
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / v.len() as f64;
        let std = if var.sqrt() > 1e-9 { var.sqrt() } else { 1.0 };
        Self { mean, std }
    }

    pub fn apply(&self, v: Option<f64>) -> f64 {
        // missing values land on the training mean
        v.map_or(0.0, |x| (x - self.mean) / self.std)
    }
}

/// Per-airport standardization fitted on the training split, plus the
/// pooled target moments used to scale the model output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub past: BTreeMap<AirportCode, Vec<Moments>>,
    pub known: BTreeMap<AirportCode, Vec<Moments>>,
    pub target: Moments,
}

impl Normalizer {
    pub fn fit(train: &MasterTable) -> Result<Self, TrainError> {
        if train.is_empty() {
            return Err(TrainError::Data("cannot fit a normalizer on an empty table".into()));
        }
        let mut past = BTreeMap::new();
        let mut known = BTreeMap::new();
        for (a, code) in train.airports.iter().enumerate() {
            let rows = train.series(a);
            past.insert(
                *code,
                (0..PAST_VARIABLES.len())
                    .map(|k| Moments::from_values(rows.iter().filter_map(|r| past_values(r)[k])))
                    .collect(),
            );
            known.insert(
                *code,
                (0..KNOWN_VARIABLES.len())
                    .map(|k| Moments::from_values(rows.iter().filter_map(|r| known_values(r)[k])))
                    .collect(),
            );
        }
        let target = Moments::from_values(train.rows.iter().map(|r| r.avg_arr_delay));
        Ok(Self { past, known, target })
    }

    /// Writes the target moments into a model config.
    pub fn configure(&self, config: &mut ModelConfig) {
        config.target_center = self.target.mean;
        config.target_scale = self.target.std;
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct WindowDiagnostics {
    /// Airports whose series was shorter than one window.
    pub short_series: Vec<AirportCode>,
}

pub fn window_count(series_len: usize, enc: usize, dec: usize, stride: usize) -> usize {
    if series_len < enc + dec {
        0
    } else {
        (series_len - enc - dec) / stride + 1
    }
}

/// One window per origin (first decoder step) every `stride` quarters, per
/// airport, entirely inside `table`.
pub fn make_windows(
    table: &MasterTable,
    normalizer: &Normalizer,
    config: &ModelConfig,
    stride: usize,
) -> Result<(Vec<ForecastWindow>, WindowDiagnostics), TrainError> {
    if stride == 0 {
        return Err(TrainError::Config("window stride must be positive".into()));
    }
    if config.n_past != PAST_VARIABLES.len() || config.n_known != KNOWN_VARIABLES.len() {
        return Err(TrainError::Config(format!(
            "model expects {} past and {} known variables; the table provides {} and {}",
            config.n_past,
            config.n_known,
            PAST_VARIABLES.len(),
            KNOWN_VARIABLES.len()
        )));
    }
    let (enc, dec) = (config.encoder_length, config.decoder_length);
    let mut windows = Vec::new();
    let mut diag = WindowDiagnostics::default();
    for (a, code) in table.airports.iter().enumerate() {
        let rows = table.series(a);
        let n = window_count(rows.len(), enc, dec, stride);
        if n == 0 {
            diag.short_series.push(*code);
            continue;
        }
        let id = code
            .id()
            .ok_or_else(|| TrainError::Data(format!("airport {code} has no static code")))?;
        let (pm, km) = match (normalizer.past.get(code), normalizer.known.get(code)) {
            (Some(p), Some(k)) => (p, k),
            _ => return Err(TrainError::Data(format!("normalizer has no statistics for {code}"))),
        };
        let past_all: Vec<f64> = rows
            .iter()
            .flat_map(|r| past_values(r).into_iter().zip(pm).map(|(v, m)| m.apply(v)))
            .collect();
        let known_all: Vec<f64> = rows
            .iter()
            .flat_map(|r| known_values(r).into_iter().zip(km).map(|(v, m)| m.apply(v)))
            .collect();
        let np = PAST_VARIABLES.len();
        let nk = KNOWN_VARIABLES.len();
        for w in 0..n {
            let origin = w * stride + enc;
            let first = &rows[origin];
            windows.push(ForecastWindow {
                statics: StaticCodes {
                    airport: id,
                    month: first.month as usize,
                    local_hour: first.local_hour as usize,
                    day_of_week: first.day_of_week as usize,
                },
                origin: first.quarter,
                past: Tensor::new(vec![enc, np], past_all[(origin - enc) * np..origin * np].to_vec())?,
                known: Tensor::new(vec![enc + dec, nk], known_all[(origin - enc) * nk..(origin + dec) * nk].to_vec())?,
                target_past: rows[origin - enc..origin].iter().map(|r| r.avg_arr_delay).collect(),
                target: rows[origin..origin + dec].iter().map(|r| r.avg_arr_delay).collect(),
            });
        }
    }
    Ok((windows, diag))
}
