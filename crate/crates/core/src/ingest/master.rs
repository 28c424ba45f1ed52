use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::records::{FlightRecord, QuarterHourRecord, WeatherRecord};
use super::IngestError;
use crate::airports::{AirportCode, AirportInfo};
use crate::clock::{day_start_quarter, quarter_of, quarter_start, Quarter, UtcMinute, QUARTERS_PER_DAY, QUARTER_MINUTES};
use crate::features::{
    cell_index, daily_cumulative_delay, great_circle_track, local_calendar, local_offset_minutes, neighborhood_cells,
    queuing_delays, smooth_delays, wind_components, IdwInterpolator, LatLon, GRID_COLS, GRID_ROWS,
};

/// One airport quarter-hour of model inputs. `None` marks a value with no
/// basis after forward-filling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub airport: AirportCode,
    #[serde(rename = "utc_quarter", with = "iso_quarter")]
    pub quarter: Quarter,
    pub month: u32,
    pub local_hour: u32,
    pub day_of_week: u32,
    pub sched_arr: f64,
    pub sched_dep: f64,
    pub capacity_arr: Option<f64>,
    pub capacity_dep: Option<f64>,
    pub throughput_arr: f64,
    pub throughput_dep: f64,
    pub demand_arr: f64,
    pub demand_dep: f64,
    pub ontime_arr_pct: Option<f64>,
    pub ontime_dep_pct: Option<f64>,
    /// Smoothed mean arrival delay in minutes.
    pub avg_arr_delay: f64,
    pub avg_dep_delay: f64,
    /// Running aircraft-minutes of queueing since local midnight.
    pub queue_arr: f64,
    pub queue_dep: f64,
    pub visibility_sm: Option<f64>,
    pub ceiling_ft: Option<f64>,
    pub arr_headwind: Option<f64>,
    pub arr_crosswind: Option<f64>,
    pub dep_headwind: Option<f64>,
    pub dep_crosswind: Option<f64>,
    pub enroute_density: f64,
    pub enroute_weather: Option<f64>,
}

pub const OPTIONAL_COLUMNS: [&str; 11] = [
    "capacity_arr",
    "capacity_dep",
    "ontime_arr_pct",
    "ontime_dep_pct",
    "visibility_sm",
    "ceiling_ft",
    "arr_headwind",
    "arr_crosswind",
    "dep_headwind",
    "dep_crosswind",
    "enroute_weather",
];

impl FeatureRow {
    pub fn optional_values(&self) -> [Option<f64>; 11] {
        [
            self.capacity_arr,
            self.capacity_dep,
            self.ontime_arr_pct,
            self.ontime_dep_pct,
            self.visibility_sm,
            self.ceiling_ft,
            self.arr_headwind,
            self.arr_crosswind,
            self.dep_headwind,
            self.dep_crosswind,
            self.enroute_weather,
        ]
    }

    fn optional_mut(&mut self) -> [&mut Option<f64>; 11] {
        [
            &mut self.capacity_arr,
            &mut self.capacity_dep,
            &mut self.ontime_arr_pct,
            &mut self.ontime_dep_pct,
            &mut self.visibility_sm,
            &mut self.ceiling_ft,
            &mut self.arr_headwind,
            &mut self.arr_crosswind,
            &mut self.dep_headwind,
            &mut self.dep_crosswind,
            &mut self.enroute_weather,
        ]
    }

    /// Checks the value-range invariants of a single row.
    pub fn check(&self) -> Result<(), String> {
        let counts = [
            ("sched_arr", self.sched_arr),
            ("sched_dep", self.sched_dep),
            ("throughput_arr", self.throughput_arr),
            ("throughput_dep", self.throughput_dep),
            ("demand_arr", self.demand_arr),
            ("demand_dep", self.demand_dep),
            ("queue_arr", self.queue_arr),
            ("queue_dep", self.queue_dep),
            ("enroute_density", self.enroute_density),
        ];
        for (name, v) in counts {
            if !(v >= 0.0) {
                return Err(format!("{name} = {v} is negative"));
            }
        }
        for (name, v) in [("ontime_arr_pct", self.ontime_arr_pct), ("ontime_dep_pct", self.ontime_dep_pct)] {
            if let Some(v) = v {
                if !(0.0..=100.0).contains(&v) {
                    return Err(format!("{name} = {v} outside [0,100]"));
                }
            }
        }
        if let Some(w) = self.enroute_weather {
            if !(0.0..=1.0).contains(&w) {
                return Err(format!("enroute_weather = {w} outside [0,1]"));
            }
        }
        if self.month > 11 || self.local_hour > 23 || self.day_of_week > 6 {
            return Err("calendar field out of range".into());
        }
        Ok(())
    }
}

mod iso_quarter {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::clock::{format_utc, parse_utc, quarter_of, quarter_start, Quarter};

    pub fn serialize<S: Serializer>(q: &Quarter, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_utc(quarter_start(*q)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Quarter, D::Error> {
        let s = String::deserialize(d)?;
        parse_utc(&s).map(quarter_of).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BuildConfig {
    pub airports: Vec<AirportCode>,
    pub start_date: NaiveDate,
    pub n_days: usize,
    /// Chebyshev radius of the enroute neighbourhood; 2 gives 5×5 cells.
    #[serde(default = "default_radius")]
    pub neighborhood_radius: usize,
    /// Longest run of quarters a value is carried forward.
    #[serde(default = "default_gap")]
    pub max_fill_gap: usize,
    /// Largest tolerated fraction of missing values per column.
    #[serde(default = "default_threshold")]
    pub missing_threshold: f64,
}

fn default_radius() -> usize {
    2
}
fn default_gap() -> usize {
    8
}
fn default_threshold() -> f64 {
    0.05
}

impl BuildConfig {
    pub fn new(airports: Vec<AirportCode>, start_date: NaiveDate, n_days: usize) -> Self {
        Self {
            airports,
            start_date,
            n_days,
            neighborhood_radius: default_radius(),
            max_fill_gap: default_gap(),
            missing_threshold: default_threshold(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub sources: Vec<String>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct BuildDiagnostics {
    /// Rows with no quarter-hour record and nothing to carry forward.
    pub missing_rows: usize,
    /// Flights dropped because wheels-on precedes wheels-off.
    pub invalid_flights: usize,
    /// Airborne positions that fell outside the grid.
    pub density_skipped: usize,
    pub duplicate_quarter_hours: usize,
    pub out_of_range_quarter_hours: usize,
    pub missing_fraction: BTreeMap<String, f64>,
}

/// Dense airport-major table: `rows[a * n_quarters + t]`.
#[derive(Clone, Debug, PartialEq)]
pub struct MasterTable {
    pub airports: Vec<AirportCode>,
    pub start: Quarter,
    pub n_quarters: usize,
    pub rows: Vec<FeatureRow>,
    pub provenance: Provenance,
    pub diagnostics: BuildDiagnostics,
}

impl MasterTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn series(&self, airport: usize) -> &[FeatureRow] {
        &self.rows[airport * self.n_quarters..(airport + 1) * self.n_quarters]
    }

    pub fn row(&self, airport: usize, t: usize) -> &FeatureRow {
        &self.rows[airport * self.n_quarters + t]
    }

    pub fn end(&self) -> Quarter {
        self.start + self.n_quarters as Quarter
    }

    /// Dense, ordered and within value ranges.
    pub fn validate(&self) -> Result<(), IngestError> {
        if self.rows.len() != self.airports.len() * self.n_quarters {
            return Err(IngestError::Table(format!(
                "{} rows for {} airports × {} quarters",
                self.rows.len(),
                self.airports.len(),
                self.n_quarters
            )));
        }
        for (a, code) in self.airports.iter().enumerate() {
            for (t, row) in self.series(a).iter().enumerate() {
                if row.airport != *code || row.quarter != self.start + t as Quarter {
                    return Err(IngestError::Table(format!(
                        "row for {} at quarter {} out of place (expected {} at {})",
                        row.airport,
                        row.quarter,
                        code,
                        self.start + t as Quarter
                    )));
                }
                row.check()
                    .map_err(|e| IngestError::Table(format!("{} quarter {}: {e}", row.airport, row.quarter)))?;
            }
        }
        Ok(())
    }

    /// Rows restricted to `[from, to)` quarters.
    pub fn slice(&self, from: Quarter, to: Quarter) -> MasterTable {
        let from = from.clamp(self.start, self.end());
        let to = to.clamp(from, self.end());
        let (lo, hi) = ((from - self.start) as usize, (to - self.start) as usize);
        let rows = (0..self.airports.len())
            .flat_map(|a| self.series(a)[lo..hi].iter().cloned())
            .collect();
        MasterTable {
            airports: self.airports.clone(),
            start: from,
            n_quarters: hi - lo,
            rows,
            provenance: self.provenance.clone(),
            diagnostics: BuildDiagnostics::default(),
        }
    }
}

/// Per-airport counts and delays derived from flight records.
struct FlightSeries {
    sched: Vec<f64>,
    throughput: Vec<f64>,
    demand: Vec<u32>,
    served: Vec<u32>,
    delay_sum: Vec<f64>,
    delay_n: Vec<u32>,
    ontime_n: Vec<u32>,
}

impl FlightSeries {
    fn new(n: usize) -> Self {
        Self {
            sched: vec![0.0; n],
            throughput: vec![0.0; n],
            demand: vec![0; n],
            served: vec![0; n],
            delay_sum: vec![0.0; n],
            delay_n: vec![0; n],
            ontime_n: vec![0; n],
        }
    }

    /// Adds one movement. Demand is bucketed at the earlier of the scheduled and
    /// actual time so early movements count only in their actual quarter.
    fn add(&mut self, start: Quarter, sched: Option<UtcMinute>, actual: Option<UtcMinute>) {
        let n = self.sched.len() as Quarter;
        let idx = |m: UtcMinute| {
            let q = quarter_of(m) - start;
            (0..n).contains(&q).then_some(q as usize)
        };
        if let Some(i) = sched.and_then(idx) {
            self.sched[i] += 1.0;
        }
        if let Some(i) = actual.and_then(idx) {
            self.throughput[i] += 1.0;
            if let Some(s) = sched {
                let delay = (actual.unwrap() - s).max(0) as f64;
                self.delay_sum[i] += delay;
                self.delay_n[i] += 1;
                if delay < 15.0 {
                    self.ontime_n[i] += 1;
                }
            }
        }
        if let (Some(s), Some(a)) = (sched, actual) {
            if let Some(d) = idx(s.min(a)) {
                self.demand[d] += 1;
                if let Some(i) = idx(a) {
                    self.served[i] += 1;
                }
            }
        }
    }

    fn avg_delay(&self) -> Vec<f64> {
        self.delay_sum
            .iter()
            .zip(&self.delay_n)
            .map(|(&s, &n)| if n == 0 { 0.0 } else { s / f64::from(n) })
            .collect()
    }
}

fn airport_info(code: AirportCode) -> Result<&'static AirportInfo, IngestError> {
    code.info().ok_or_else(|| IngestError::UnknownAirport(code.to_string()))
}

/// Enroute target points per airport: neighbourhood cell centres inside the
/// grid, or the airport position itself when it lies outside the grid.
fn enroute_targets(info: &AirportInfo, radius: usize) -> Vec<LatLon> {
    match cell_index(info.lat, info.lon) {
        Ok((r, c)) => neighborhood_cells(r, c, radius)
            .map(|(r, c)| crate::features::cell_center(r, c))
            .collect(),
        Err(_) => vec![LatLon::new(info.lat, info.lon)],
    }
}

pub fn build_master(
    flights: &[FlightRecord],
    quarter_hours: &[QuarterHourRecord],
    weather: &[WeatherRecord],
    config: &BuildConfig,
) -> Result<MasterTable, IngestError> {
    if config.airports.is_empty() || config.n_days == 0 {
        return Err(IngestError::Config("at least one airport and one day are required".into()));
    }
    let infos = config
        .airports
        .iter()
        .map(|&c| airport_info(c))
        .collect::<Result<Vec<_>, _>>()?;
    let pos: HashMap<AirportCode, usize> = config.airports.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    if pos.len() != config.airports.len() {
        return Err(IngestError::Config("duplicate airport in configuration".into()));
    }
    let n_air = config.airports.len();
    let n = config.n_days * QUARTERS_PER_DAY as usize;
    let start = day_start_quarter(config.start_date);
    let end = start + n as Quarter;
    let mut diag = BuildDiagnostics::default();

    // flight-derived counts, delays and queues
    let mut arr: Vec<FlightSeries> = (0..n_air).map(|_| FlightSeries::new(n)).collect();
    let mut dep: Vec<FlightSeries> = (0..n_air).map(|_| FlightSeries::new(n)).collect();
    let mut valid = Vec::with_capacity(flights.len());
    for f in flights {
        if let (Some(off), Some(on)) = (f.act_off, f.act_on) {
            if on < off {
                diag.invalid_flights += 1;
                continue;
            }
        }
        valid.push(f);
        if let Some(&a) = pos.get(&f.dest) {
            arr[a].add(start, f.sched_on, f.act_on);
        }
        if let Some(&a) = pos.get(&f.origin) {
            dep[a].add(start, f.sched_off, f.act_off);
        }
    }

    // quarter-hour records
    let mut qh: Vec<Vec<Option<&QuarterHourRecord>>> = vec![vec![None; n]; n_air];
    for r in quarter_hours {
        let Some(&a) = pos.get(&r.airport) else { continue };
        if !(start..end).contains(&r.quarter) {
            diag.out_of_range_quarter_hours += 1;
            continue;
        }
        let slot = &mut qh[a][(r.quarter - start) as usize];
        if slot.is_some() {
            diag.duplicate_quarter_hours += 1;
        }
        *slot = Some(r);
    }

    let density = enroute_density(&valid, &infos, start, n, config.neighborhood_radius, &mut diag)?;
    let weather_series = enroute_weather(weather, &infos, start, n, config.neighborhood_radius)?;

    let mut rows = Vec::with_capacity(n_air * n);
    for (a, info) in infos.iter().enumerate() {
        let code = config.airports[a];
        let q_arr = queuing_delays(&arr[a].demand, &arr[a].served).expect("equal lengths");
        let q_dep = queuing_delays(&dep[a].demand, &dep[a].served).expect("equal lengths");
        let local_day: Vec<i64> = (0..n)
            .map(|t| {
                let m = quarter_start(start + t as Quarter);
                (m + local_offset_minutes(info, m)).div_euclid(24 * 60)
            })
            .collect();
        let cum_arr = daily_cumulative_delay(&q_arr.backlog, &local_day).expect("equal lengths");
        let cum_dep = daily_cumulative_delay(&q_dep.backlog, &local_day).expect("equal lengths");
        let avg_arr = smooth_delays(&arr[a].avg_delay()).expect("non-empty");
        let avg_dep = smooth_delays(&dep[a].avg_delay()).expect("non-empty");
        let ontime = |s: &FlightSeries, t: usize| {
            (s.delay_n[t] > 0).then(|| 100.0 * f64::from(s.ontime_n[t]) / f64::from(s.delay_n[t]))
        };

        for t in 0..n {
            let q = start + t as Quarter;
            let cal = local_calendar(info, quarter_start(q));
            let rec = qh[a][t];
            let get = |f: fn(&QuarterHourRecord) -> Option<f64>| rec.and_then(f);
            let wind = |hdg: Option<f64>, default: f64| {
                let (speed, dir) = (get(|r| r.wind_speed_kt)?, get(|r| r.wind_dir_deg)?);
                Some(wind_components(speed, dir, hdg.unwrap_or(default)))
            };
            let arr_wind = wind(get(|r| r.arr_runway_hdg), info.arr_runway_hdg);
            let dep_wind = wind(get(|r| r.dep_runway_hdg), info.dep_runway_hdg);
            rows.push(FeatureRow {
                airport: code,
                quarter: q,
                month: cal.month,
                local_hour: cal.local_hour,
                day_of_week: cal.day_of_week,
                sched_arr: get(|r| r.sched_arr).unwrap_or(arr[a].sched[t]),
                sched_dep: get(|r| r.sched_dep).unwrap_or(dep[a].sched[t]),
                capacity_arr: get(|r| r.arr_capacity),
                capacity_dep: get(|r| r.dep_capacity),
                throughput_arr: get(|r| r.throughput_arr).unwrap_or(arr[a].throughput[t]),
                throughput_dep: get(|r| r.throughput_dep).unwrap_or(dep[a].throughput[t]),
                demand_arr: get(|r| r.demand_arr).unwrap_or(f64::from(arr[a].demand[t])),
                demand_dep: get(|r| r.demand_dep).unwrap_or(f64::from(dep[a].demand[t])),
                ontime_arr_pct: get(|r| r.ontime_arr_pct).or_else(|| ontime(&arr[a], t)),
                ontime_dep_pct: get(|r| r.ontime_dep_pct).or_else(|| ontime(&dep[a], t)),
                avg_arr_delay: avg_arr[t],
                avg_dep_delay: avg_dep[t],
                queue_arr: cum_arr[t],
                queue_dep: cum_dep[t],
                visibility_sm: get(|r| r.visibility_sm),
                ceiling_ft: get(|r| r.ceiling_ft),
                arr_headwind: arr_wind.map(|w| w.0),
                arr_crosswind: arr_wind.map(|w| w.1),
                dep_headwind: dep_wind.map(|w| w.0),
                dep_crosswind: dep_wind.map(|w| w.1),
                enroute_density: density[a][t],
                enroute_weather: weather_series[a][t],
            });
        }
    }

    forward_fill(&mut rows, n, config.max_fill_gap);
    diag.missing_rows = rows.iter().filter(|r| r.optional_values().iter().all(Option::is_none)).count();
    for (k, name) in OPTIONAL_COLUMNS.iter().enumerate() {
        let missing = rows.iter().filter(|r| r.optional_values()[k].is_none()).count();
        let fraction = missing as f64 / rows.len() as f64;
        diag.missing_fraction.insert(name.to_string(), fraction);
        if fraction > config.missing_threshold {
            return Err(IngestError::MissingData {
                column: name.to_string(),
                fraction,
                threshold: config.missing_threshold,
            });
        }
    }

    let table = MasterTable {
        airports: config.airports.clone(),
        start,
        n_quarters: n,
        rows,
        provenance: Provenance::default(),
        diagnostics: diag,
    };
    table.validate()?;
    Ok(table)
}

/// Carries each optional value forward over at most `max_gap` quarters within
/// an airport's series.
fn forward_fill(rows: &mut [FeatureRow], n: usize, max_gap: usize) {
    for series in rows.chunks_mut(n) {
        let mut last: [Option<(f64, usize)>; 11] = [None; 11];
        for (t, row) in series.iter_mut().enumerate() {
            for (k, slot) in row.optional_mut().into_iter().enumerate() {
                match *slot {
                    Some(v) => last[k] = Some((v, t)),
                    None => {
                        if let Some((v, at)) = last[k] {
                            if t - at <= max_gap {
                                *slot = Some(v);
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Airborne flights within each airport's neighbourhood at every quarter
/// start, equivalent to summing the traffic-density grid over the cells.
fn enroute_density(
    flights: &[&FlightRecord],
    infos: &[&AirportInfo],
    start: Quarter,
    n: usize,
    radius: usize,
    diag: &mut BuildDiagnostics,
) -> Result<Vec<Vec<f64>>, IngestError> {
    let mut watchers: Vec<Vec<u16>> = vec![Vec::new(); GRID_ROWS * GRID_COLS];
    for (a, info) in infos.iter().enumerate() {
        if let Ok((r, c)) = cell_index(info.lat, info.lon) {
            for (rr, cc) in neighborhood_cells(r, c, radius) {
                watchers[rr * GRID_COLS + cc].push(a as u16);
            }
        }
    }
    let mut density = vec![vec![0.0; n]; infos.len()];
    let (lo, hi) = (quarter_start(start), quarter_start(start + n as Quarter));
    for f in flights {
        let (Some(off), Some(on)) = (f.act_off, f.act_on) else { continue };
        if on <= lo || off >= hi || on <= off {
            continue;
        }
        let (Some(o), Some(d)) = (f.origin.info(), f.dest.info()) else { continue };
        let track = match great_circle_track(LatLon::new(o.lat, o.lon), LatLon::new(d.lat, d.lon), off, on, QUARTER_MINUTES)
        {
            Ok(t) => t,
            Err(_) => continue,
        };
        for p in track {
            if !(lo..hi).contains(&p.minute) {
                continue;
            }
            let t = (quarter_of(p.minute) - start) as usize;
            match cell_index(p.pos.lat, p.pos.lon) {
                Ok((r, c)) => {
                    for &a in &watchers[r * GRID_COLS + c] {
                        density[a as usize][t] += 1.0;
                    }
                }
                Err(_) => diag.density_skipped += 1,
            }
        }
    }
    Ok(density)
}

/// Mean IDW convective weight over each airport's enroute targets, per hour,
/// repeated over the hour's four quarters. Hours without reports are `None`.
fn enroute_weather(
    weather: &[WeatherRecord],
    infos: &[&AirportInfo],
    start: Quarter,
    n: usize,
    radius: usize,
) -> Result<Vec<Vec<Option<f64>>>, IngestError> {
    let mut out = vec![vec![None; n]; infos.len()];
    if weather.is_empty() {
        return Ok(out);
    }
    let targets: Vec<Vec<LatLon>> = infos.iter().map(|i| enroute_targets(i, radius)).collect();
    let flat: Vec<LatLon> = targets.iter().flatten().copied().collect();

    // station identity and position, first report wins
    let mut stations: BTreeMap<&str, LatLon> = BTreeMap::new();
    for w in weather {
        stations.entry(&w.station_id).or_insert(LatLon::new(w.lat, w.lon));
    }
    let station_index: HashMap<&str, usize> = stations.keys().enumerate().map(|(i, &k)| (k, i)).collect();
    let positions: Vec<LatLon> = stations.values().copied().collect();

    let per_hour = 60 / QUARTER_MINUTES;
    let (h_lo, h_hi) = (start.div_euclid(per_hour), (start + n as Quarter + per_hour - 1).div_euclid(per_hour));
    let mut by_hour: BTreeMap<i64, BTreeMap<usize, f64>> = BTreeMap::new();
    for w in weather {
        if (h_lo..h_hi).contains(&w.utc_hour) {
            by_hour.entry(w.utc_hour).or_default().insert(station_index[w.station_id.as_str()], w.convective_weight);
        }
    }
    let mut cache: HashMap<Vec<usize>, IdwInterpolator> = HashMap::new();
    for (hour, reports) in by_hour {
        let ids: Vec<usize> = reports.keys().copied().collect();
        let values: Vec<f64> = reports.values().copied().collect();
        if !cache.contains_key(&ids) {
            let pts: Vec<LatLon> = ids.iter().map(|&i| positions[i]).collect();
            cache.insert(ids.clone(), IdwInterpolator::new(&pts, &flat)?);
        }
        let interp = cache[&ids].interpolate(&values)?;
        let mut offset = 0;
        for (a, tg) in targets.iter().enumerate() {
            let mean = interp[offset..offset + tg.len()].iter().sum::<f64>() / tg.len() as f64;
            offset += tg.len();
            for k in 0..per_hour {
                let q = hour * per_hour + k - start;
                if (0..n as Quarter).contains(&q) {
                    out[a][q as usize] = Some(mean.clamp(0.0, 1.0));
                }
            }
        }
    }
    Ok(out)
}

pub fn write_master_csv<W: Write>(table: &MasterTable, out: W) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(out);
    for r in &table.rows {
        w.serialize(r).map_err(|e| IngestError::Csv {
            source_name: "master.csv".into(),
            msg: e.to_string(),
        })?;
    }
    w.flush().map_err(|e| IngestError::Io {
        path: "master.csv".into(),
        source: e,
    })?;
    Ok(())
}

/// Reads a table written by [`write_master_csv`]; airport order follows first
/// appearance.
pub fn read_master_csv<R: Read>(input: R) -> Result<MasterTable, IngestError> {
    let mut reader = csv::Reader::from_reader(input);
    let mut rows: Vec<FeatureRow> = Vec::new();
    for (i, r) in reader.deserialize().enumerate() {
        rows.push(r.map_err(|e| IngestError::Csv {
            source_name: "master.csv".into(),
            msg: format!("row {}: {e}", i + 1),
        })?);
    }
    let mut airports: Vec<AirportCode> = Vec::new();
    for r in &rows {
        if airports.last() != Some(&r.airport) {
            airports.push(r.airport);
        }
    }
    let n_quarters = if airports.is_empty() { 0 } else { rows.len() / airports.len() };
    let table = MasterTable {
        airports,
        start: rows.first().map_or(0, |r| r.quarter),
        n_quarters,
        rows,
        provenance: Provenance::default(),
        diagnostics: BuildDiagnostics::default(),
    };
    table.validate()?;
    Ok(table)
}
