//! Input processing that turns raw flight, airport and weather records into
//! per-quarter features.

mod calendar;
mod geo;
mod grid;
mod queuing;
mod smoothing;
mod weather;
mod wind;

pub use calendar::{calendar_features, local_calendar, local_offset_minutes, CalendarFields};
pub use geo::{central_angle, great_circle_track, interpolate_great_circle, LatLon, TrackPoint};
pub use grid::{
    cell_center, cell_index, neighborhood_cells, traffic_density, write_grid_csv, AirspaceGrid, DensitySnapshot,
    GRID_CELL_DEG, GRID_COLS, GRID_LAT_MIN, GRID_LON_MIN, GRID_ROWS,
};
pub use queuing::{daily_cumulative_delay, queuing_delays, QueueDelays};
pub use smoothing::smooth_delays;
pub use weather::{weather_grid, IdwInterpolator, StationObs, IDW_NEIGHBORS, IDW_POWER};
pub use wind::wind_components;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeatureError {
    #[error("{0}: empty input")]
    Empty(&'static str),
    #[error("{op}: length mismatch ({left} vs {right})")]
    LengthMismatch { op: &'static str, left: usize, right: usize },
    #[error("coordinate outside the airspace grid: {what} = {value}")]
    OutOfGrid { what: &'static str, value: f64 },
    #[error("great-circle arc undefined between antipodal points {0:?} and {1:?}")]
    Antipodal(LatLon, LatLon),
    #[error("{0}")]
    Invalid(String),
    #[error("unknown airport {0}")]
    UnknownAirport(String),
}
