
use airdelay_core::features::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common;

use common::oracles::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn queue_total_matches_fifo_oracle(
        pairs in (1usize..=96).prop_flat_map(|n| (
            proptest::collection::vec(0u32..=10, n),
            proptest::collection::vec(0u32..=10, n),
        ))
    ) {
        let (s, a) = pairs;
        let q = queuing_delays(&s, &a).unwrap();
        prop_assert_eq!(q.total, fifo_total_wait(&s, &a));
        let (mut d, mut x) = (0u32, 0u32);
        for t in 0..s.len() {
            d += s[t];
            x += a[t];
            if x >= d {
                prop_assert_eq!(q.backlog[t], 0);
            }
        }
    }
}

proptest! {
    #[test]
    fn slerp_matches_rodrigues_and_stays_on_arc(
        la1 in -80.0f64..80.0, lo1 in -180.0f64..180.0,
        la2 in -80.0f64..80.0, lo2 in -180.0f64..180.0,
        f in 0.0f64..=1.0,
    ) {
        let (a, b) = (LatLon::new(la1, lo1), LatLon::new(la2, lo2));
        let d = angle(unit(a), unit(b));
        prop_assume!(d > 1e-3 && d < std::f64::consts::PI - 1e-3);
        let p = interpolate_great_circle(a, b, f).unwrap();
        let o = rodrigues_slerp(a, b, f);
        prop_assert!((p.lat - o.lat).abs() < 1e-9, "lat {} vs {}", p.lat, o.lat);
        prop_assert!(lon_diff(p.lon, o.lon) < 1e-9, "lon {} vs {}", p.lon, o.lon);
        let arc = angle(unit(a), unit(p)) + angle(unit(p), unit(b));
        prop_assert!((arc - d).abs() < 1e-9);
    }

    #[test]
    fn wind_components_preserve_speed(speed in 0.0f64..80.0, dir in 0.0f64..360.0, hdg in 0.0f64..360.0) {
        let (h, c) = wind_components(speed, dir, hdg);
        prop_assert!((h * h + c * c - speed * speed).abs() < 1e-9);
        prop_assert!(c >= 0.0);
    }

    #[test]
    fn smoothing_stays_in_envelope(series in proptest::collection::vec(-100.0f64..300.0, 1..200)) {
        let s = smooth_delays(&series).unwrap();
        let lo = series.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = series.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!(s.len(), series.len());
        for v in &s {
            prop_assert!(*v >= lo - 1e-12 && *v <= hi + 1e-12);
        }
    }

    #[test]
    fn smoothing_preserves_mean_of_padded_constant(c in -50.0f64..50.0, inner in proptest::collection::vec(-50.0f64..50.0, 0..20)) {
        // interior bump away from the edges keeps the total mass
        let mut series = vec![c, c];
        series.extend(inner.iter().map(|x| c + x));
        series.extend([c, c]);
        let s = smooth_delays(&series).unwrap();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        prop_assert!((mean(&s) - mean(&series)).abs() < 1e-9);
    }
}

#[test]
fn sfo_jfk_midpoint_matches_vector_oracle() {
    let (a, b) = (LatLon::new(37.62, -122.38), LatLon::new(40.64, -73.78));
    let p = interpolate_great_circle(a, b, 0.5).unwrap();
    let o = rodrigues_slerp(a, b, 0.5);
    assert!((p.lat - o.lat).abs() < 1e-9 && (p.lon - o.lon).abs() < 1e-9);
    // the midpoint bows north of both endpoints
    assert!(p.lat > 40.64);
}

#[test]
fn geometry_on_100_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let a = LatLon::new(rng.gen_range(25.0..50.0), rng.gen_range(-125.0..-66.0));
        let b = LatLon::new(rng.gen_range(25.0..50.0), rng.gen_range(-125.0..-66.0));
        let f = rng.gen_range(0.0..1.0);
        let p = interpolate_great_circle(a, b, f).unwrap();
        let o = rodrigues_slerp(a, b, f);
        assert!((p.lat - o.lat).abs() < 1e-9 && (p.lon - o.lon).abs() < 1e-9);
    }
}

#[test]
fn density_matches_point_in_cell_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut tracks = Vec::new();
    for _ in 0..50 {
        let a = LatLon::new(rng.gen_range(20.0..52.0), rng.gen_range(-130.0..-62.0));
        let b = LatLon::new(rng.gen_range(20.0..52.0), rng.gen_range(-130.0..-62.0));
        let dep = rng.gen_range(0..120);
        let arr = dep + rng.gen_range(20..400);
        tracks.push(great_circle_track(a, b, dep, arr, 15).unwrap());
    }
    for t in (0..600).step_by(15) {
        let snap = traffic_density(tracks.iter().map(|t| t.as_slice()), t);
        let mut oracle = vec![vec![0.0; GRID_COLS]; GRID_ROWS];
        let mut airborne = 0;
        let mut outside = 0;
        for track in &tracks {
            let Some(p) = track.iter().find(|p| p.minute == t) else { continue };
            airborne += 1;
            let mut hit = false;
            for (r, row) in oracle.iter_mut().enumerate() {
                let lat0 = 25.0 + 0.25 * r as f64;
                if !(p.pos.lat >= lat0 && p.pos.lat < lat0 + 0.25) {
                    continue;
                }
                for (c, cell) in row.iter_mut().enumerate() {
                    let lon0 = -125.0 + 0.25 * c as f64;
                    if p.pos.lon >= lon0 && p.pos.lon < lon0 + 0.25 {
                        *cell += 1.0;
                        hit = true;
                    }
                }
            }
            if !hit {
                outside += 1;
            }
        }
        for (r, row) in oracle.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                assert_eq!(snap.grid.get(r, c), v, "t={t} cell ({r},{c})");
            }
        }
        assert_eq!(snap.skipped, outside);
        assert_eq!(snap.grid.sum() as usize + snap.skipped, airborne);
    }
}

#[test]
fn weather_matches_direct_idw_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let obs: Vec<StationObs> = (0..5)
        .map(|_| StationObs {
            pos: LatLon::new(rng.gen_range(25.0..50.0), rng.gen_range(-125.0..-66.0)),
            weight: rng.gen_range(0.0..1.0),
        })
        .collect();
    let grid = weather_grid(&obs).unwrap();
    let mut worst: f64 = 0.0;
    for r in 0..GRID_ROWS {
        for c in 0..GRID_COLS {
            let center = unit(LatLon::new(25.0 + 0.25 * (r as f64 + 0.5), -125.0 + 0.25 * (c as f64 + 0.5)));
            // five stations are all within the eight nearest
            let (num, den) = obs.iter().fold((0.0, 0.0), |(n, d), o| {
                let w = angle(center, unit(o.pos)).powi(-2);
                (n + w * o.weight, d + w)
            });
            worst = worst.max((grid.get(r, c) - num / den).abs());
        }
    }
    assert!(worst < 1e-10, "max deviation {worst}");
}

#[test]
fn idw_uses_eight_nearest_only() {
    let mut stations = vec![LatLon::new(40.0, -100.0)];
    let mut values = vec![0.0];
    for i in 0..8 {
        stations.push(LatLon::new(40.0, -99.0 + 0.1 * i as f64));
        values.push(1.0);
    }
    let idw = IdwInterpolator::new(&stations, &[LatLon::new(40.0, -98.0)]).unwrap();
    assert_eq!(idw.interpolate(&values).unwrap(), vec![1.0]);
}
