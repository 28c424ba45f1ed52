use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::IngestError;
use crate::airports::AirportCode;
use crate::clock::{format_utc, parse_utc, quarter_of, quarter_start, Quarter, UtcMinute};

pub const FLIGHTS_HEADER: [&str; 7] = [
    "flight_id",
    "origin",
    "dest",
    "sched_off_utc",
    "act_off_utc",
    "sched_on_utc",
    "act_on_utc",
];

pub const QUARTER_HOUR_HEADER: [&str; 18] = [
    "airport",
    "utc_quarter",
    "arr_capacity",
    "dep_capacity",
    "sched_arr",
    "sched_dep",
    "demand_arr",
    "demand_dep",
    "throughput_arr",
    "throughput_dep",
    "ontime_arr_pct",
    "ontime_dep_pct",
    "visibility_sm",
    "ceiling_ft",
    "wind_speed_kt",
    "wind_dir_deg",
    "arr_runway_hdg",
    "dep_runway_hdg",
];

pub const WEATHER_HEADER: [&str; 5] = ["station_id", "lat", "lon", "utc_hour", "convective_weight"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlightRecord {
    pub flight_id: String,
    pub origin: AirportCode,
    pub dest: AirportCode,
    pub sched_off: Option<UtcMinute>,
    pub act_off: Option<UtcMinute>,
    pub sched_on: Option<UtcMinute>,
    pub act_on: Option<UtcMinute>,
}

/// One airport quarter-hour as reported; blank cells are `None`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuarterHourRecord {
    pub airport: AirportCode,
    pub quarter: Quarter,
    pub arr_capacity: Option<f64>,
    pub dep_capacity: Option<f64>,
    pub sched_arr: Option<f64>,
    pub sched_dep: Option<f64>,
    pub demand_arr: Option<f64>,
    pub demand_dep: Option<f64>,
    pub throughput_arr: Option<f64>,
    pub throughput_dep: Option<f64>,
    pub ontime_arr_pct: Option<f64>,
    pub ontime_dep_pct: Option<f64>,
    pub visibility_sm: Option<f64>,
    pub ceiling_ft: Option<f64>,
    pub wind_speed_kt: Option<f64>,
    pub wind_dir_deg: Option<f64>,
    pub arr_runway_hdg: Option<f64>,
    pub dep_runway_hdg: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeatherRecord {
    pub station_id: String,
    pub lat: f64,
    pub lon: f64,
    /// Hours since the epoch.
    pub utc_hour: i64,
    pub convective_weight: f64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Reject {
    pub source: String,
    pub line: u64,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Parsed<T> {
    pub records: Vec<T>,
    pub rejects: Vec<Reject>,
}

struct Row<'a> {
    record: &'a csv::StringRecord,
    cols: &'a [usize],
}

impl Row<'_> {
    fn raw(&self, i: usize) -> &str {
        self.record.get(self.cols[i]).unwrap_or("").trim()
    }

    fn text(&self, i: usize, name: &str) -> Result<&str, String> {
        let s = self.raw(i);
        if s.is_empty() {
            Err(format!("{name}: empty"))
        } else {
            Ok(s)
        }
    }

    fn code(&self, i: usize, name: &str) -> Result<AirportCode, String> {
        self.text(i, name)?.parse().map_err(|e| format!("{name}: {e}"))
    }

    fn time(&self, i: usize, name: &str) -> Result<Option<UtcMinute>, String> {
        let s = self.raw(i);
        if s.is_empty() {
            return Ok(None);
        }
        parse_utc(s).map(Some).map_err(|e| format!("{name}: {e}"))
    }

    fn num(&self, i: usize, name: &str) -> Result<Option<f64>, String> {
        let s = self.raw(i);
        if s.is_empty() {
            return Ok(None);
        }
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Some(v)),
            _ => Err(format!("{name}: not a finite number {s:?}")),
        }
    }

    fn required_num(&self, i: usize, name: &str) -> Result<f64, String> {
        self.num(i, name)?.ok_or_else(|| format!("{name}: empty"))
    }
}

fn parse_table<R: Read, T>(
    input: R,
    source: &str,
    header: &[&str],
    parse: impl Fn(&Row) -> Result<T, String>,
) -> Result<Parsed<T>, IngestError> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    let headers = reader
        .headers()
        .map_err(|e| IngestError::Csv {
            source_name: source.to_string(),
            msg: e.to_string(),
        })?
        .clone();
    let cols = header
        .iter()
        .map(|name| {
            headers
                .iter()
                .position(|h| h.trim() == *name)
                .ok_or_else(|| IngestError::MissingColumn {
                    source_name: source.to_string(),
                    column: name.to_string(),
                })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = Parsed {
        records: Vec::new(),
        rejects: Vec::new(),
    };
    for result in reader.records() {
        let record = match result {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                out.rejects.push(Reject {
                    source: source.to_string(),
                    line,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != headers.len() {
            out.rejects.push(Reject {
                source: source.to_string(),
                line,
                reason: format!("expected {} fields, found {}", headers.len(), record.len()),
            });
            continue;
        }
        match parse(&Row { record: &record, cols: &cols }) {
            Ok(v) => out.records.push(v),
            Err(reason) => out.rejects.push(Reject {
                source: source.to_string(),
                line,
                reason,
            }),
        }
    }
    Ok(out)
}

fn open(path: &Path) -> Result<File, IngestError> {
    File::open(path).map_err(|e| IngestError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

pub fn read_flights<R: Read>(input: R, source: &str) -> Result<Parsed<FlightRecord>, IngestError> {
    parse_table(input, source, &FLIGHTS_HEADER, |r| {
        Ok(FlightRecord {
            flight_id: r.text(0, "flight_id")?.to_string(),
            origin: r.code(1, "origin")?,
            dest: r.code(2, "dest")?,
            sched_off: r.time(3, "sched_off_utc")?,
            act_off: r.time(4, "act_off_utc")?,
            sched_on: r.time(5, "sched_on_utc")?,
            act_on: r.time(6, "act_on_utc")?,
        })
    })
}

pub fn read_quarter_hours<R: Read>(input: R, source: &str) -> Result<Parsed<QuarterHourRecord>, IngestError> {
    parse_table(input, source, &QUARTER_HOUR_HEADER, |r| {
        let minute = r.time(1, "utc_quarter")?.ok_or("utc_quarter: empty")?;
        let mut v = [None; 16];
        for (k, slot) in v.iter_mut().enumerate() {
            *slot = r.num(k + 2, QUARTER_HOUR_HEADER[k + 2])?;
        }
        let [arr_capacity, dep_capacity, sched_arr, sched_dep, demand_arr, demand_dep, throughput_arr, throughput_dep, ontime_arr_pct, ontime_dep_pct, visibility_sm, ceiling_ft, wind_speed_kt, wind_dir_deg, arr_runway_hdg, dep_runway_hdg] =
            v;
        Ok(QuarterHourRecord {
            airport: r.code(0, "airport")?,
            quarter: quarter_of(minute),
            arr_capacity,
            dep_capacity,
            sched_arr,
            sched_dep,
            demand_arr,
            demand_dep,
            throughput_arr,
            throughput_dep,
            ontime_arr_pct,
            ontime_dep_pct,
            visibility_sm,
            ceiling_ft,
            wind_speed_kt,
            wind_dir_deg,
            arr_runway_hdg,
            dep_runway_hdg,
        })
    })
}

pub fn read_weather<R: Read>(input: R, source: &str) -> Result<Parsed<WeatherRecord>, IngestError> {
    parse_table(input, source, &WEATHER_HEADER, |r| {
        let lat = r.required_num(1, "lat")?;
        let lon = r.required_num(2, "lon")?;
        let minute = r.time(3, "utc_hour")?.ok_or("utc_hour: empty")?;
        let convective_weight = r.required_num(4, "convective_weight")?;
        if !(0.0..=1.0).contains(&convective_weight) {
            return Err(format!("convective_weight {convective_weight} outside [0,1]"));
        }
        if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lon) {
            return Err(format!("station position ({lat}, {lon}) out of range"));
        }
        Ok(WeatherRecord {
            station_id: r.text(0, "station_id")?.to_string(),
            lat,
            lon,
            utc_hour: minute.div_euclid(60),
            convective_weight,
        })
    })
}

pub fn parse_flights(path: &Path) -> Result<Parsed<FlightRecord>, IngestError> {
    read_flights(open(path)?, &path.display().to_string())
}

pub fn parse_quarter_hours(path: &Path) -> Result<Parsed<QuarterHourRecord>, IngestError> {
    read_quarter_hours(open(path)?, &path.display().to_string())
}

pub fn parse_weather(path: &Path) -> Result<Parsed<WeatherRecord>, IngestError> {
    read_weather(open(path)?, &path.display().to_string())
}

fn opt_time(t: Option<UtcMinute>) -> String {
    t.map(format_utc).unwrap_or_default()
}

fn opt_num(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_flights<W: Write>(flights: &[FlightRecord], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(FLIGHTS_HEADER)?;
    for f in flights {
        w.write_record([
            f.flight_id.clone(),
            f.origin.to_string(),
            f.dest.to_string(),
            opt_time(f.sched_off),
            opt_time(f.act_off),
            opt_time(f.sched_on),
            opt_time(f.act_on),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_quarter_hours<W: Write>(rows: &[QuarterHourRecord], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(QUARTER_HOUR_HEADER)?;
    for r in rows {
        let mut rec = vec![
            r.airport.to_string(),
            format_utc(quarter_start(r.quarter)),
        ];
        rec.extend(
            [
                r.arr_capacity,
                r.dep_capacity,
                r.sched_arr,
                r.sched_dep,
                r.demand_arr,
                r.demand_dep,
                r.throughput_arr,
                r.throughput_dep,
                r.ontime_arr_pct,
                r.ontime_dep_pct,
                r.visibility_sm,
                r.ceiling_ft,
                r.wind_speed_kt,
                r.wind_dir_deg,
                r.arr_runway_hdg,
                r.dep_runway_hdg,
            ]
            .map(opt_num),
        );
        w.write_record(rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_weather<W: Write>(obs: &[WeatherRecord], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(WEATHER_HEADER)?;
    for o in obs {
        w.write_record([
            o.station_id.clone(),
            o.lat.to_string(),
            o.lon.to_string(),
            format_utc(o.utc_hour * 60),
            o.convective_weight.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
