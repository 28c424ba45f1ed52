use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use super::records::{write_flights, write_quarter_hours, write_weather, FlightRecord, QuarterHourRecord, WeatherRecord};
use super::IngestError;
use crate::airports::{code_of, AirportCode, AirportInfo};
use crate::clock::{day_start_quarter, format_utc, quarter_of, quarter_start, Quarter, UtcMinute, QUARTERS_PER_DAY};
use crate::features::{central_angle, local_calendar, LatLon};

const EARTH_RADIUS_KM: f64 = 6371.0;
const CRUISE_KMH: f64 = 780.0;
const EXTERNAL_BLOCK_MINUTES: i64 = 120;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    /// Uses the first `n_airports` of the built-in table.
    pub n_airports: usize,
    pub n_days: usize,
    pub start_date: NaiveDate,
    /// Extra departures per quarter at the centre of each daily peak.
    pub peak_demand: f64,
    /// Departures per quarter between 06:00 and 23:00 local outside the peaks.
    pub base_demand: f64,
    pub morning_peak_hour: f64,
    pub evening_peak_hour: f64,
    pub peak_width_hours: f64,
    /// Movements per quarter in clear weather.
    pub capacity_arr: f64,
    pub capacity_dep: f64,
    /// Expected weather events per airport and day.
    pub weather_event_rate: f64,
    pub event_capacity_factor: f64,
    pub event_quarters: usize,
    /// Standard deviation of airborne-time noise in minutes.
    pub noise_minutes: f64,
    /// Share of traffic to or from airports outside the configured set.
    pub external_fraction: f64,
    /// Probability that an optional quarter-hour cell is left blank.
    pub missing_rate: f64,
    pub background_stations: usize,
    /// Extra events as (airport index, first quarter offset), each lasting
    /// `event_quarters`.
    pub forced_events: Vec<(usize, usize)>,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_airports: 3,
            n_days: 60,
            start_date: NaiveDate::from_ymd_opt(2016, 1, 1).expect("valid date"),
            peak_demand: 6.0,
            base_demand: 2.0,
            morning_peak_hour: 8.5,
            evening_peak_hour: 17.5,
            peak_width_hours: 1.5,
            capacity_arr: 7.0,
            capacity_dep: 8.0,
            weather_event_rate: 0.35,
            event_capacity_factor: 0.5,
            event_quarters: 12,
            noise_minutes: 4.0,
            external_fraction: 0.3,
            missing_rate: 0.0,
            background_stations: 12,
            forced_events: Vec::new(),
            seed: 1,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), IngestError> {
        let bad = |m: &str| Err(IngestError::Config(format!("synth: {m}")));
        if self.n_airports == 0 || self.n_airports > crate::airports::AIRPORTS.len() {
            return bad("n_airports must be in 1..=30");
        }
        if self.n_days == 0 {
            return bad("n_days must be positive");
        }
        if !(self.capacity_arr >= 1.0 && self.capacity_dep >= 1.0) {
            return bad("capacities must be at least 1 per quarter");
        }
        if !(self.peak_demand >= 0.0 && self.base_demand >= 0.0 && self.peak_width_hours > 0.0) {
            return bad("demand parameters must be non-negative with positive peak width");
        }
        if !(self.event_capacity_factor > 0.0 && self.event_capacity_factor <= 1.0) {
            return bad("event_capacity_factor must be in (0, 1]");
        }
        for (name, p) in [
            ("external_fraction", self.external_fraction),
            ("missing_rate", self.missing_rate),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(&format!("{name} must be in [0, 1]"));
            }
        }
        if self.forced_events.iter().any(|&(a, _)| a >= self.n_airports) {
            return bad("forced event airport index out of range");
        }
        if !(self.weather_event_rate >= 0.0 && self.noise_minutes >= 0.0) {
            return bad("rates and noise must be non-negative");
        }
        Ok(())
    }

    pub fn airports(&self) -> Vec<AirportCode> {
        (0..self.n_airports).map(code_of).collect()
    }

    pub fn start_quarter(&self) -> Quarter {
        day_start_quarter(self.start_date)
    }

    pub fn n_quarters(&self) -> usize {
        self.n_days * QUARTERS_PER_DAY as usize
    }
}

/// True per-quarter queue lengths by construction: a flight waits in the
/// arrival (departure) queue from the earlier of its scheduled and actual
/// quarter until its actual quarter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub airport: AirportCode,
    pub quarter: Quarter,
    pub arr_backlog: u32,
    pub dep_backlog: u32,
    /// Quarters of waiting for arrivals whose queue entry falls in this quarter.
    pub arr_wait_quarters: u32,
    pub in_weather_event: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthData {
    pub config: SynthConfig,
    pub flights: Vec<FlightRecord>,
    pub quarter_hours: Vec<QuarterHourRecord>,
    pub weather: Vec<WeatherRecord>,
    pub oracle: Vec<OracleRow>,
}

struct Movement {
    flight: usize,
    ready: UtcMinute,
}

/// FIFO service with `cap(q)` slots per quarter. Movements served in their
/// ready quarter keep their ready minute; carried-over movements take the
/// slot minute in the quarter they are served.
fn fifo_serve(mut queue_in: Vec<Movement>, cap: impl Fn(Quarter) -> u32) -> Vec<(usize, UtcMinute)> {
    queue_in.sort_by_key(|m| (m.ready, m.flight));
    let mut out = Vec::with_capacity(queue_in.len());
    let mut waiting: std::collections::VecDeque<&Movement> = std::collections::VecDeque::new();
    let mut next = 0;
    let Some(first) = queue_in.first() else { return out };
    let mut q = quarter_of(first.ready);
    while next < queue_in.len() || !waiting.is_empty() {
        while next < queue_in.len() && quarter_of(queue_in[next].ready) == q {
            waiting.push_back(&queue_in[next]);
            next += 1;
        }
        let c = cap(q).max(1);
        for j in 0..c {
            let Some(m) = waiting.pop_front() else { break };
            let minute = if quarter_of(m.ready) == q {
                m.ready
            } else {
                quarter_start(q) + i64::from(j) * 15 / i64::from(c)
            };
            out.push((m.flight, minute));
        }
        q = if waiting.is_empty() && next < queue_in.len() {
            quarter_of(queue_in[next].ready)
        } else {
            q + 1
        };
    }
    out
}

fn demand_rate(cfg: &SynthConfig, local_hour: f64, weekend: bool) -> f64 {
    let bump = |c: f64| (-(local_hour - c).powi(2) / (2.0 * cfg.peak_width_hours.powi(2))).exp();
    let day = if (6.0..23.0).contains(&local_hour) { cfg.base_demand } else { 0.1 * cfg.base_demand };
    let rate = day + cfg.peak_demand * (bump(cfg.morning_peak_hour) + bump(cfg.evening_peak_hour));
    if weekend {
        0.85 * rate
    } else {
        rate
    }
}

fn block_minutes(o: &AirportInfo, d: &AirportInfo) -> i64 {
    let km = central_angle(LatLon::new(o.lat, o.lon), LatLon::new(d.lat, d.lon)) * EARTH_RADIUS_KM;
    (km / CRUISE_KMH * 60.0).round() as i64 + 25
}

fn sample_poisson(rng: &mut ChaCha8Rng, lambda: f64) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    Poisson::new(lambda).expect("positive rate").sample(rng) as u64
}

pub fn synth_generate(cfg: &SynthConfig) -> Result<SynthData, IngestError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let airports = cfg.airports();
    let infos: Vec<&AirportInfo> = airports.iter().map(|c| c.info().expect("table airport")).collect();
    let na = airports.len();
    let start = cfg.start_quarter();
    let n = cfg.n_quarters();
    let end = start + n as Quarter;
    let external = AirportCode::new("XTRN").expect("valid code");
    let ext_share = if na == 1 { 1.0 } else { cfg.external_fraction };

    // weather events: per airport a boolean mask over quarters
    let mut event = vec![vec![false; n]; na];
    for (a, info) in infos.iter().enumerate() {
        for day in 0..cfg.n_days {
            if rng.gen::<f64>() >= cfg.weather_event_rate {
                continue;
            }
            // convective afternoons: start between 12:00 and 20:00 local
            let local_start = rng.gen_range(48..80) as i64;
            let offset_q = -i64::from(info.utc_offset_hours) * 4;
            let s = day as i64 * QUARTERS_PER_DAY + local_start + offset_q;
            for k in 0..cfg.event_quarters as i64 {
                if (0..n as i64).contains(&(s + k)) {
                    event[a][(s + k) as usize] = true;
                }
            }
        }
    }
    for &(a, s) in &cfg.forced_events {
        let end = (s + cfg.event_quarters).min(n);
        if s < end {
            event[a][s..end].fill(true);
        }
    }
    let cap = |a: usize, t: Quarter, base: f64| -> u32 {
        let i = t - start;
        let factor = if (0..n as i64).contains(&i) && event[a][i as usize] {
            cfg.event_capacity_factor
        } else {
            1.0
        };
        (base * factor).floor().max(1.0) as u32
    };

    // schedule
    let mut flights: Vec<FlightRecord> = Vec::new();
    let mut airborne: Vec<i64> = Vec::new();
    for t in 0..n {
        let q = start + t as Quarter;
        for (a, info) in infos.iter().enumerate() {
            let cal = local_calendar(info, quarter_start(q));
            let lambda = demand_rate(cfg, cal.local_hour as f64 + 0.5, cal.day_of_week >= 5);
            let n_dep = sample_poisson(&mut rng, lambda);
            for _ in 0..n_dep {
                let off = quarter_start(q) + rng.gen_range(0..15);
                let (dest, block) = if rng.gen::<f64>() < ext_share {
                    (external, EXTERNAL_BLOCK_MINUTES)
                } else {
                    let mut d = rng.gen_range(0..na - 1);
                    if d >= a {
                        d += 1;
                    }
                    (airports[d], block_minutes(info, infos[d]))
                };
                flights.push(FlightRecord {
                    flight_id: String::new(),
                    origin: airports[a],
                    dest,
                    sched_off: Some(off),
                    act_off: None,
                    sched_on: Some(off + block),
                    act_on: None,
                });
                airborne.push(block);
            }
            if ext_share > 0.0 && na > 1 {
                // inbound from outside the set, at the external share of local demand
                for _ in 0..sample_poisson(&mut rng, lambda * ext_share) {
                    let on = quarter_start(q) + rng.gen_range(0..15);
                    flights.push(FlightRecord {
                        flight_id: String::new(),
                        origin: external,
                        dest: airports[a],
                        sched_off: Some(on - EXTERNAL_BLOCK_MINUTES),
                        act_off: None,
                        sched_on: Some(on),
                        act_on: None,
                    });
                    airborne.push(EXTERNAL_BLOCK_MINUTES);
                }
            } else if na == 1 {
                for _ in 0..sample_poisson(&mut rng, lambda) {
                    let on = quarter_start(q) + rng.gen_range(0..15);
                    flights.push(FlightRecord {
                        flight_id: String::new(),
                        origin: external,
                        dest: airports[a],
                        sched_off: Some(on - EXTERNAL_BLOCK_MINUTES),
                        act_off: None,
                        sched_on: Some(on),
                        act_on: None,
                    });
                    airborne.push(EXTERNAL_BLOCK_MINUTES);
                }
            }
        }
    }
    for (i, f) in flights.iter_mut().enumerate() {
        f.flight_id = format!("F{i:07}");
    }

    // departure queues
    let pos = |c: AirportCode| airports.iter().position(|&x| x == c);
    let mut dep_in: Vec<Vec<Movement>> = (0..na).map(|_| Vec::new()).collect();
    for (i, f) in flights.iter_mut().enumerate() {
        match pos(f.origin) {
            Some(a) => dep_in[a].push(Movement {
                flight: i,
                ready: f.sched_off.expect("scheduled"),
            }),
            None => f.act_off = f.sched_off,
        }
    }
    for (a, movements) in dep_in.into_iter().enumerate() {
        for (i, m) in fifo_serve(movements, |q| cap(a, q, cfg.capacity_dep)) {
            flights[i].act_off = Some(m);
        }
    }

    // arrival queues, fed by departure times plus noisy airborne time
    let noise = Normal::new(0.0, cfg.noise_minutes.max(1e-12)).expect("finite sigma");
    let mut arr_in: Vec<Vec<Movement>> = (0..na).map(|_| Vec::new()).collect();
    for (i, f) in flights.iter().enumerate() {
        let jitter = if cfg.noise_minutes > 0.0 {
            noise.sample(&mut rng).round() as i64
        } else {
            0
        };
        let fly = (airborne[i] - 20 + jitter).max(15);
        let ready = f.act_off.expect("departed") + fly + 20;
        if let Some(a) = pos(f.dest) {
            arr_in[a].push(Movement { flight: i, ready });
        }
    }
    for f in flights.iter_mut() {
        if pos(f.dest).is_none() {
            f.act_on = Some(f.act_off.expect("departed") + EXTERNAL_BLOCK_MINUTES);
        }
    }
    for (a, movements) in arr_in.into_iter().enumerate() {
        for (i, m) in fifo_serve(movements, |q| cap(a, q, cfg.capacity_arr)) {
            flights[i].act_on = Some(m);
        }
    }

    // per-quarter aggregates and oracle
    let idx = |m: UtcMinute| {
        let q = quarter_of(m) - start;
        (0..n as i64).contains(&q).then_some(q as usize)
    };
    #[derive(Clone, Default)]
    struct Agg {
        sched: f64,
        demand: f64,
        through: f64,
        ontime: f64,
        moved: f64,
        backlog: u32,
        wait: u32,
    }
    let mut arr = vec![vec![Agg::default(); n]; na];
    let mut dep = vec![vec![Agg::default(); n]; na];
    for f in &flights {
        for (code, sched, act, side) in [
            (f.dest, f.sched_on, f.act_on, &mut arr),
            (f.origin, f.sched_off, f.act_off, &mut dep),
        ] {
            let (Some(a), Some(s), Some(x)) = (pos(code), sched, act) else { continue };
            let series = &mut side[a];
            if let Some(t) = idx(s) {
                series[t].sched += 1.0;
            }
            if let Some(t) = idx(x) {
                series[t].through += 1.0;
                series[t].moved += 1.0;
                if x - s < 15 {
                    series[t].ontime += 1.0;
                }
            }
            if let Some(d) = idx(s.min(x)) {
                series[d].demand += 1.0;
                let stop = (quarter_of(x) - start).min(n as i64) as usize;
                series[d].wait += (stop - d) as u32;
                for slot in &mut series[d..stop] {
                    slot.backlog += 1;
                }
            }
        }
    }

    let mut quarter_hours = Vec::with_capacity(na * n);
    let mut oracle = Vec::with_capacity(na * n);
    let mut wind: Vec<(f64, f64)> = (0..na).map(|_| (rng.gen_range(0.0..15.0), rng.gen_range(0.0..360.0))).collect();
    for (a, info) in infos.iter().enumerate() {
        for t in 0..n {
            let q = start + t as Quarter;
            if t % 4 == 0 {
                let (s, d) = wind[a];
                wind[a] = (
                    (s + rng.gen_range(-2.0..2.0)).clamp(0.0, 30.0),
                    (d + rng.gen_range(-20.0..20.0)).rem_euclid(360.0),
                );
            }
            let storm = event[a][t];
            let (ws, wd) = wind[a];
            let (ra, rd) = (&arr[a][t], &dep[a][t]);
            let pct = |g: &Agg| if g.moved > 0.0 { 100.0 * g.ontime / g.moved } else { 100.0 };
            let mut optional = [
                Some(f64::from(cap(a, q, cfg.capacity_arr))),
                Some(f64::from(cap(a, q, cfg.capacity_dep))),
                Some(pct(ra)),
                Some(pct(rd)),
                Some(if storm { 2.0 } else { 10.0 }),
                Some(if storm { 800.0 } else { 5000.0 }),
                Some(if storm { ws + 15.0 } else { ws }),
                Some(wd),
            ];
            if cfg.missing_rate > 0.0 {
                for v in optional.iter_mut() {
                    if rng.gen::<f64>() < cfg.missing_rate {
                        *v = None;
                    }
                }
            }
            let [arr_capacity, dep_capacity, ontime_arr_pct, ontime_dep_pct, visibility_sm, ceiling_ft, wind_speed_kt, wind_dir_deg] =
                optional;
            quarter_hours.push(QuarterHourRecord {
                airport: airports[a],
                quarter: q,
                arr_capacity,
                dep_capacity,
                sched_arr: Some(ra.sched),
                sched_dep: Some(rd.sched),
                demand_arr: Some(ra.demand),
                demand_dep: Some(rd.demand),
                throughput_arr: Some(ra.through),
                throughput_dep: Some(rd.through),
                ontime_arr_pct,
                ontime_dep_pct,
                visibility_sm,
                ceiling_ft,
                wind_speed_kt,
                wind_dir_deg,
                arr_runway_hdg: Some(info.arr_runway_hdg),
                dep_runway_hdg: Some(info.dep_runway_hdg),
            });
            oracle.push(OracleRow {
                airport: airports[a],
                quarter: q,
                arr_backlog: ra.backlog,
                dep_backlog: rd.backlog,
                arr_wait_quarters: ra.wait,
                in_weather_event: storm,
            });
        }
    }

    // hourly station reports: one station per airport plus background stations
    let mut stations: Vec<(String, LatLon, Option<usize>)> = infos
        .iter()
        .enumerate()
        .map(|(a, i)| (format!("S{}", airports[a]), LatLon::new(i.lat, i.lon), Some(a)))
        .collect();
    for k in 0..cfg.background_stations {
        stations.push((
            format!("B{k:03}"),
            LatLon::new(rng.gen_range(26.0..49.0), rng.gen_range(-124.0..-67.0)),
            None,
        ));
    }
    let mut weather = Vec::new();
    let h0 = start.div_euclid(4);
    for h in h0..end.div_euclid(4) {
        for (id, p, owner) in &stations {
            let t = ((h - h0) * 4) as usize;
            let w = match owner {
                Some(a) if (t..t + 4).any(|k| event[*a][k]) => rng.gen_range(0.6..1.0),
                Some(_) => 0.0,
                None => {
                    if rng.gen::<f64>() < 0.02 {
                        rng.gen_range(0.0..0.5)
                    } else {
                        0.0
                    }
                }
            };
            weather.push(WeatherRecord {
                station_id: id.clone(),
                lat: p.lat,
                lon: p.lon,
                utc_hour: h,
                convective_weight: w,
            });
        }
    }

    Ok(SynthData {
        config: cfg.clone(),
        flights,
        quarter_hours,
        weather,
        oracle,
    })
}

fn create(path: &Path) -> Result<BufWriter<File>, IngestError> {
    File::create(path).map(BufWriter::new).map_err(|e| IngestError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> IngestError + '_ {
    move |e| IngestError::Csv {
        source_name: path.display().to_string(),
        msg: e.to_string(),
    }
}

/// Writes flights.csv, airport_qh.csv, weather.csv and oracle.csv into `dir`.
pub fn write_synth(data: &SynthData, dir: &Path) -> Result<(), IngestError> {
    std::fs::create_dir_all(dir).map_err(|e| IngestError::Io {
        path: dir.display().to_string(),
        source: e,
    })?;
    let p = dir.join("flights.csv");
    write_flights(&data.flights, create(&p)?).map_err(csv_err(&p))?;
    let p = dir.join("airport_qh.csv");
    write_quarter_hours(&data.quarter_hours, create(&p)?).map_err(csv_err(&p))?;
    let p = dir.join("weather.csv");
    write_weather(&data.weather, create(&p)?).map_err(csv_err(&p))?;
    let p = dir.join("oracle.csv");
    let mut w = csv::Writer::from_writer(create(&p)?);
    w.write_record(["airport", "utc_quarter", "arr_backlog", "dep_backlog", "arr_wait_quarters", "in_weather_event"])
        .map_err(csv_err(&p))?;
    for o in &data.oracle {
        w.write_record([
            o.airport.to_string(),
            format_utc(quarter_start(o.quarter)),
            o.arr_backlog.to_string(),
            o.dep_backlog.to_string(),
            o.arr_wait_quarters.to_string(),
            u8::from(o.in_weather_event).to_string(),
        ])
        .map_err(csv_err(&p))?;
    }
    w.flush().map_err(|e| IngestError::Io {
        path: p.display().to_string(),
        source: e,
    })?;
    Ok(())
}
