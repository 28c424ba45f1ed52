use std::collections::BTreeMap;

use airdelay_core::airports::AirportCode;
use airdelay_core::clock::{parse_utc, quarter_of, quarter_start, QUARTERS_PER_DAY};
use airdelay_core::features::{
    cell_index, great_circle_track, local_offset_minutes, queuing_delays, traffic_density, LatLon,
};
use airdelay_core::ingest::*;
use chrono::NaiveDate;

fn code(s: &str) -> AirportCode {
    s.parse().unwrap()
}

fn quiet(n_airports: usize, n_days: usize) -> SynthConfig {
    SynthConfig {
        n_airports,
        n_days,
        peak_demand: 2.0,
        base_demand: 1.0,
        ..SynthConfig::default()
    }
}

fn build(data: &SynthData) -> MasterTable {
    let cfg = BuildConfig::new(data.config.airports(), data.config.start_date, data.config.n_days);
    build_master(&data.flights, &data.quarter_hours, &data.weather, &cfg).unwrap()
}

#[test]
fn empty_file_with_header_parses_to_nothing() {
    let p = read_flights(FLIGHTS_HEADER.join(",").as_bytes(), "f").unwrap();
    assert!(p.records.is_empty() && p.rejects.is_empty());
    let p = read_quarter_hours(QUARTER_HOUR_HEADER.join(",").as_bytes(), "q").unwrap();
    assert!(p.records.is_empty() && p.rejects.is_empty());
    let p = read_weather(WEATHER_HEADER.join(",").as_bytes(), "w").unwrap();
    assert!(p.records.is_empty() && p.rejects.is_empty());
}

#[test]
fn golden_flights_file() {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/flights_golden.csv");
    let p = parse_flights(&path).unwrap();
    assert!(p.rejects.is_empty());
    let t = |s: &str| Some(parse_utc(s).unwrap());
    assert_eq!(
        p.records,
        vec![
            FlightRecord {
                flight_id: "AA100".into(),
                origin: code("JFK"),
                dest: code("LAX"),
                sched_off: t("2016-03-01T13:00:00Z"),
                act_off: t("2016-03-01T13:12:00Z"),
                sched_on: t("2016-03-01T19:05:00Z"),
                act_on: t("2016-03-01T19:20:00Z"),
            },
            FlightRecord {
                flight_id: "DL7".into(),
                origin: code("ATL"),
                dest: code("XTRN"),
                sched_off: t("2016-03-01T08:30:00Z"),
                act_off: None,
                sched_on: t("2016-03-01T10:30:00Z"),
                act_on: None,
            },
            FlightRecord {
                flight_id: "UA3".into(),
                origin: code("SFO"),
                dest: code("ORD"),
                sched_off: t("2016-03-01T23:50:00Z"),
                act_off: t("2016-03-02T00:05:00Z"),
                sched_on: t("2016-03-02T04:10:00Z"),
                act_on: t("2016-03-02T04:01:00Z"),
            },
        ]
    );
    assert_eq!(p.records[0].origin.id(), Some(13));
    assert_eq!(p.records[1].dest.id(), None);
}

#[test]
fn ordering_is_not_a_parse_error() {
    let text = format!(
        "{}\nX1,BOS,DCA,2016-01-01T10:00Z,2016-01-01T10:00Z,2016-01-01T09:00Z,2016-01-01T08:00Z\n",
        FLIGHTS_HEADER.join(",")
    );
    let p = read_flights(text.as_bytes(), "f").unwrap();
    assert_eq!(p.records.len(), 1);
    assert!(p.rejects.is_empty());
}

#[test]
fn malformed_rows_are_rejected_with_line_numbers() {
    let text = format!(
        "{}\nok,BOS,DCA,,,,\nbad,BOS,DCA,tomorrow,,,\nshort,BOS\nlow,bos,DCA,,,,\n",
        FLIGHTS_HEADER.join(",")
    );
    let p = read_flights(text.as_bytes(), "f.csv").unwrap();
    assert_eq!(p.records.len(), 1);
    let lines: Vec<u64> = p.rejects.iter().map(|r| r.line).collect();
    assert_eq!(lines, vec![3, 4, 5]);
    assert!(p.rejects[0].reason.contains("sched_off_utc"));
    let w = read_weather("station_id,lat,lon,utc_hour,convective_weight\nS,40,-100,2016-01-01T00:00Z,1.5\n".as_bytes(), "w")
        .unwrap();
    assert_eq!(w.rejects.len(), 1);
}

#[test]
fn missing_column_is_a_hard_error() {
    let err = read_weather("station_id,lat,lon,utc_hour\n".as_bytes(), "w.csv").unwrap_err();
    assert!(matches!(err, IngestError::MissingColumn { ref column, .. } if column == "convective_weight"));
}

#[test]
fn synth_csv_files_parse_back() {
    let data = synth_generate(&quiet(2, 2)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_synth(&data, dir.path()).unwrap();
    let f = parse_flights(&dir.path().join("flights.csv")).unwrap();
    let q = parse_quarter_hours(&dir.path().join("airport_qh.csv")).unwrap();
    let w = parse_weather(&dir.path().join("weather.csv")).unwrap();
    assert!(f.rejects.is_empty() && q.rejects.is_empty() && w.rejects.is_empty());
    assert_eq!(f.records, data.flights);
    assert_eq!(q.records, data.quarter_hours);
    assert_eq!(w.records, data.weather);
}

#[test]
fn one_airport_one_day_gives_96_rows() {
    let data = synth_generate(&quiet(1, 1)).unwrap();
    let t = build(&data);
    assert_eq!(t.len(), 96);
    assert_eq!(t.n_quarters, QUARTERS_PER_DAY as usize);
}

#[test]
fn three_airports_ten_days() {
    let data = synth_generate(&quiet(3, 10)).unwrap();
    let t = build(&data);
    assert_eq!(t.len(), 2880);
    t.validate().unwrap();
    assert!(t.diagnostics.missing_fraction.values().all(|&f| f == 0.0));
}

#[test]
fn uncongested_generator_has_no_delays() {
    let cfg = SynthConfig {
        noise_minutes: 0.0,
        weather_event_rate: 0.0,
        capacity_arr: 1000.0,
        capacity_dep: 1000.0,
        n_days: 3,
        ..SynthConfig::default()
    };
    let data = synth_generate(&cfg).unwrap();
    for f in &data.flights {
        assert_eq!(f.act_on, f.sched_on, "{}", f.flight_id);
        assert_eq!(f.act_off, f.sched_off, "{}", f.flight_id);
    }
    let t = build(&data);
    assert!(t.rows.iter().all(|r| r.avg_arr_delay == 0.0 && r.queue_arr == 0.0 && r.queue_dep == 0.0));
}

#[test]
fn same_seed_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quiet(2, 3);
    for sub in ["a", "b"] {
        write_synth(&synth_generate(&cfg).unwrap(), &dir.path().join(sub)).unwrap();
    }
    for f in ["flights.csv", "airport_qh.csv", "weather.csv", "oracle.csv"] {
        let a = std::fs::read(dir.path().join("a").join(f)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(f)).unwrap();
        assert!(a == b, "{f} differs");
    }
    let other = synth_generate(&SynthConfig { seed: 2, ..cfg }).unwrap();
    assert_ne!(other.flights, synth_generate(&quiet(2, 3)).unwrap().flights);
}

#[test]
fn single_weather_event_queue_matches_generator_waits() {
    let cfg = SynthConfig {
        n_airports: 1,
        n_days: 1,
        noise_minutes: 0.0,
        weather_event_rate: 0.0,
        capacity_arr: 8.0,
        capacity_dep: 1000.0,
        peak_demand: 6.0,
        base_demand: 2.0,
        event_capacity_factor: 0.5,
        event_quarters: 8,
        forced_events: vec![(0, 52)],
        ..SynthConfig::default()
    };
    let data = synth_generate(&cfg).unwrap();
    let (mut sched, mut actual) = (vec![0u32; 96], vec![0u32; 96]);
    let start = cfg.start_quarter();
    let code = cfg.airports()[0];
    for f in data.flights.iter().filter(|f| f.dest == code) {
        let (s, a) = (f.sched_on.unwrap(), f.act_on.unwrap());
        let d = quarter_of(s.min(a)) - start;
        if (0..96).contains(&d) {
            sched[d as usize] += 1;
            let q = quarter_of(a) - start;
            if (0..96).contains(&q) {
                actual[q as usize] += 1;
            }
        }
    }
    let q = queuing_delays(&sched, &actual).unwrap();
    let waits: u32 = data.oracle.iter().map(|o| o.arr_wait_quarters).sum();
    assert!(waits > 0, "the event should create a queue");
    assert_eq!(q.total, 15.0 * f64::from(waits));
    let backlog: Vec<u32> = data.oracle.iter().map(|o| o.arr_backlog).collect();
    assert_eq!(q.backlog, backlog);
}

#[test]
fn master_queue_columns_equal_generator_oracle() {
    let cfg = SynthConfig {
        n_days: 6,
        weather_event_rate: 0.5,
        ..SynthConfig::default()
    };
    let data = synth_generate(&cfg).unwrap();
    let t = build(&data);
    for (a, code) in t.airports.iter().enumerate() {
        let info = code.info().unwrap();
        let oracle: Vec<&OracleRow> = data.oracle.iter().filter(|o| o.airport == *code).collect();
        let (mut acc_a, mut acc_d, mut day) = (0.0, 0.0, None);
        for (row, o) in t.series(a).iter().zip(oracle) {
            assert_eq!(row.quarter, o.quarter);
            let m = quarter_start(row.quarter);
            let d = (m + local_offset_minutes(info, m)).div_euclid(1440);
            if day != Some(d) {
                acc_a = 0.0;
                acc_d = 0.0;
                day = Some(d);
            }
            acc_a += 15.0 * f64::from(o.arr_backlog);
            acc_d += 15.0 * f64::from(o.dep_backlog);
            assert_eq!(row.queue_arr, acc_a, "{code} {}", row.quarter);
            assert_eq!(row.queue_dep, acc_d, "{code} {}", row.quarter);
        }
    }
    assert!(t.rows.iter().any(|r| r.queue_arr > 0.0));
}

#[test]
fn enroute_density_equals_grid_neighbourhood_sum() {
    let data = synth_generate(&SynthConfig {
        n_airports: 6,
        n_days: 1,
        external_fraction: 0.0,
        ..SynthConfig::default()
    })
    .unwrap();
    let t = build(&data);
    let tracks: Vec<_> = data
        .flights
        .iter()
        .filter_map(|f| {
            let (o, d) = (f.origin.info()?, f.dest.info()?);
            great_circle_track(LatLon::new(o.lat, o.lon), LatLon::new(d.lat, d.lon), f.act_off?, f.act_on?, 15).ok()
        })
        .collect();
    let mut checked = 0.0;
    for (a, code) in t.airports.iter().enumerate() {
        let info = code.info().unwrap();
        let (r, c) = cell_index(info.lat, info.lon).unwrap();
        for (i, row) in t.series(a).iter().enumerate().step_by(7) {
            let snap = traffic_density(tracks.iter().map(|t| t.as_slice()), quarter_start(row.quarter));
            assert_eq!(row.enroute_density, snap.grid.neighborhood_sum(r, c, 2), "{code} t={i}");
            checked += row.enroute_density;
        }
    }
    assert!(checked > 0.0);
}

#[test]
fn master_csv_round_trip() {
    let data = synth_generate(&SynthConfig {
        n_days: 2,
        missing_rate: 0.02,
        ..SynthConfig::default()
    })
    .unwrap();
    let t = build(&data);
    let mut buf = Vec::new();
    write_master_csv(&t, &mut buf).unwrap();
    let back = read_master_csv(buf.as_slice()).unwrap();
    assert_eq!(back.rows, t.rows);
    assert_eq!(back.airports, t.airports);
    assert_eq!((back.start, back.n_quarters), (t.start, t.n_quarters));
}

#[test]
fn missing_data_gate() {
    let sparse = synth_generate(&SynthConfig {
        n_days: 2,
        missing_rate: 0.6,
        ..SynthConfig::default()
    })
    .unwrap();
    let cfg = BuildConfig::new(sparse.config.airports(), sparse.config.start_date, 2);
    let err = build_master(&sparse.flights, &sparse.quarter_hours, &sparse.weather, &cfg).unwrap_err();
    assert!(matches!(err, IngestError::MissingData { .. }), "{err}");

    // light gaps are bridged by forward filling
    let light = synth_generate(&SynthConfig {
        n_days: 2,
        missing_rate: 0.05,
        ..SynthConfig::default()
    })
    .unwrap();
    let t = build(&light);
    assert!(t.diagnostics.missing_fraction.values().all(|&f| f < 0.01));
}

#[test]
fn unknown_airport_in_config_is_rejected() {
    let cfg = BuildConfig::new(vec![code("XTRN")], NaiveDate::from_ymd_opt(2016, 1, 1).unwrap(), 1);
    assert!(matches!(build_master(&[], &[], &[], &cfg), Err(IngestError::UnknownAirport(_))));
}

#[test]
fn split_partitions_the_table() {
    let data = synth_generate(&quiet(2, 40)).unwrap();
    let t = build(&data);
    let spec = SplitSpec::default_for(&t).unwrap();
    let parts = split(&t, &spec).unwrap();
    let total: usize = parts.iter().map(|p| p.len()).sum();
    assert_eq!(total, t.len());
    let mut seen: BTreeMap<(AirportCode, i64), usize> = BTreeMap::new();
    for p in &parts {
        p.validate().unwrap();
        for r in &p.rows {
            *seen.entry((r.airport, r.quarter)).or_default() += 1;
        }
    }
    assert_eq!(seen.len(), t.len());
    assert!(seen.values().all(|&c| c == 1));
}

#[test]
fn full_year_split_has_fifteen_test_days() {
    let start = NaiveDate::from_ymd_opt(2016, 1, 1).unwrap();
    let spec = SplitSpec::tail(start, 366, 16, 15).unwrap();
    assert_eq!(spec.test.start, NaiveDate::from_ymd_opt(2016, 12, 17).unwrap());
    assert_eq!(spec.validation.start, NaiveDate::from_ymd_opt(2016, 12, 1).unwrap());
    // a lightweight table spanning the year: only the split arithmetic matters
    let data = synth_generate(&SynthConfig {
        n_airports: 1,
        n_days: 366,
        peak_demand: 0.2,
        base_demand: 0.1,
        weather_event_rate: 0.0,
        background_stations: 0,
        ..SynthConfig::default()
    })
    .unwrap();
    let t = build(&data);
    let [_, val, test] = split(&t, &spec).unwrap();
    assert_eq!(test.len(), 15 * 96);
    assert_eq!(val.len(), 16 * 96);
}

#[test]
fn degenerate_and_reversed_splits() {
    let data = synth_generate(&quiet(1, 4)).unwrap();
    let t = build(&data);
    let d = |k: u32| NaiveDate::from_ymd_opt(2016, 1, k).unwrap();
    let empty_val = SplitSpec {
        train: DateRange::new(d(1), d(4)),
        validation: DateRange::new(d(4), d(4)),
        test: DateRange::new(d(4), d(5)),
    };
    let [train, val, test] = split(&t, &empty_val).unwrap();
    assert!(val.is_empty());
    assert_eq!((train.len(), test.len()), (288, 96));
    let reversed = SplitSpec {
        train: DateRange::new(d(3), d(1)),
        ..empty_val
    };
    assert!(matches!(split(&t, &reversed), Err(IngestError::Split(_))));
    let overlapping = SplitSpec {
        validation: DateRange::new(d(3), d(4)),
        ..empty_val
    };
    assert!(split(&t, &overlapping).is_err());
}
