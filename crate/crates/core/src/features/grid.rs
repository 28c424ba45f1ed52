use std::io::Write;

use super::geo::{LatLon, TrackPoint};
use super::FeatureError;
use crate::clock::UtcMinute;

pub const GRID_ROWS: usize = 100;
pub const GRID_COLS: usize = 236;
pub const GRID_CELL_DEG: f64 = 0.25;
pub const GRID_LAT_MIN: f64 = 25.0;
pub const GRID_LON_MIN: f64 = -125.0;
const GRID_LAT_MAX: f64 = 50.0;
const GRID_LON_MAX: f64 = -66.0;

/// Row-major 100×236 field over the continental airspace.
#[derive(Clone, Debug, PartialEq)]
pub struct AirspaceGrid {
    values: Vec<f64>,
}

impl Default for AirspaceGrid {
    fn default() -> Self {
        Self::zeros()
    }
}

impl AirspaceGrid {
    pub fn zeros() -> Self {
        Self {
            values: vec![0.0; GRID_ROWS * GRID_COLS],
        }
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * GRID_COLS + col]
    }

    pub fn set(&mut self, row: usize, col: usize, v: f64) {
        self.values[row * GRID_COLS + col] = v;
    }

    pub fn add(&mut self, row: usize, col: usize, v: f64) {
        self.values[row * GRID_COLS + col] += v;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn neighborhood_sum(&self, row: usize, col: usize, radius: usize) -> f64 {
        neighborhood_cells(row, col, radius).map(|(r, c)| self.get(r, c)).sum()
    }
}

pub fn cell_index(lat: f64, lon: f64) -> Result<(usize, usize), FeatureError> {
    if !(GRID_LAT_MIN..GRID_LAT_MAX).contains(&lat) {
        return Err(FeatureError::OutOfGrid { what: "lat", value: lat });
    }
    if !(GRID_LON_MIN..GRID_LON_MAX).contains(&lon) {
        return Err(FeatureError::OutOfGrid { what: "lon", value: lon });
    }
    let row = ((lat - GRID_LAT_MIN) / GRID_CELL_DEG).floor() as usize;
    let col = ((lon - GRID_LON_MIN) / GRID_CELL_DEG).floor() as usize;
    Ok((row.min(GRID_ROWS - 1), col.min(GRID_COLS - 1)))
}

pub fn cell_center(row: usize, col: usize) -> LatLon {
    LatLon {
        lat: GRID_LAT_MIN + (row as f64 + 0.5) * GRID_CELL_DEG,
        lon: GRID_LON_MIN + (col as f64 + 0.5) * GRID_CELL_DEG,
    }
}

/// Cells within Chebyshev distance `radius`, clipped to the grid.
pub fn neighborhood_cells(row: usize, col: usize, radius: usize) -> impl Iterator<Item = (usize, usize)> {
    let r0 = row.saturating_sub(radius);
    let r1 = (row + radius).min(GRID_ROWS - 1);
    let c0 = col.saturating_sub(radius);
    let c1 = (col + radius).min(GRID_COLS - 1);
    (r0..=r1).flat_map(move |r| (c0..=c1).map(move |c| (r, c)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensitySnapshot {
    pub grid: AirspaceGrid,
    /// Airborne flights whose position fell outside the grid.
    pub skipped: usize,
}

/// Counts flights airborne at `t`, i.e. whose track has a sample at `t`.
pub fn traffic_density<'a, I>(tracks: I, t: UtcMinute) -> DensitySnapshot
where
    I: IntoIterator<Item = &'a [TrackPoint]>,
{
    let mut grid = AirspaceGrid::zeros();
    let mut skipped = 0;
    for track in tracks {
        let Ok(i) = track.binary_search_by_key(&t, |p| p.minute) else {
            continue;
        };
        match cell_index(track[i].pos.lat, track[i].pos.lon) {
            Ok((r, c)) => grid.add(r, c, 1.0),
            Err(_) => skipped += 1,
        }
    }
    DensitySnapshot { grid, skipped }
}

/// `row,col,value` with a header line.
pub fn write_grid_csv<W: Write>(grid: &AirspaceGrid, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["row", "col", "value"])?;
    for r in 0..GRID_ROWS {
        for c in 0..GRID_COLS {
            w.write_record([r.to_string(), c.to_string(), grid.get(r, c).to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}
