use super::geo::{central_angle, LatLon};
use super::grid::{cell_center, AirspaceGrid, GRID_COLS, GRID_ROWS};
use super::FeatureError;

pub const IDW_POWER: i32 = 2;
pub const IDW_NEIGHBORS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StationObs {
    pub pos: LatLon,
    /// Convective severity in [0, 1].
    pub weight: f64,
}

/// Inverse-distance weighting onto a fixed set of target points. The k-nearest
/// station lists depend only on geometry, so they are computed once and reused
/// for every hour that reports the same stations.
#[derive(Clone, Debug)]
pub struct IdwInterpolator {
    n_stations: usize,
    /// Per target: `Err(i)` for an exact station hit, else (station, weight) pairs.
    neighbors: Vec<Result<Vec<(usize, f64)>, usize>>,
}

impl IdwInterpolator {
    pub fn new(stations: &[LatLon], targets: &[LatLon]) -> Result<Self, FeatureError> {
        if stations.is_empty() {
            return Err(FeatureError::Empty("weather stations"));
        }
        let neighbors = targets
            .iter()
            .map(|&t| {
                let mut d: Vec<(f64, usize)> =
                    stations.iter().enumerate().map(|(i, &s)| (central_angle(t, s), i)).collect();
                d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                if d[0].0 == 0.0 {
                    return Err(d[0].1);
                }
                Ok(d.iter()
                    .take(IDW_NEIGHBORS)
                    .map(|&(dist, i)| (i, dist.powi(-IDW_POWER)))
                    .collect())
            })
            .collect();
        Ok(Self {
            n_stations: stations.len(),
            neighbors,
        })
    }

    pub fn interpolate(&self, values: &[f64]) -> Result<Vec<f64>, FeatureError> {
        if values.len() != self.n_stations {
            return Err(FeatureError::LengthMismatch {
                op: "idw",
                left: values.len(),
                right: self.n_stations,
            });
        }
        Ok(self
            .neighbors
            .iter()
            .map(|n| match n {
                Err(i) => values[*i],
                Ok(list) => {
                    let (num, den) = list
                        .iter()
                        .fold((0.0, 0.0), |(num, den), &(i, w)| (num + w * values[i], den + w));
                    num / den
                }
            }
            .clamp(0.0, 1.0))
            .collect())
    }
}

/// IDW interpolation of station severities onto every cell center.
pub fn weather_grid(obs: &[StationObs]) -> Result<AirspaceGrid, FeatureError> {
    if obs.is_empty() {
        return Err(FeatureError::Empty("weather_grid"));
    }
    if let Some(o) = obs.iter().find(|o| !(0.0..=1.0).contains(&o.weight)) {
        return Err(FeatureError::Invalid(format!("severity weight {} outside [0,1]", o.weight)));
    }
    let stations: Vec<LatLon> = obs.iter().map(|o| o.pos).collect();
    let targets: Vec<LatLon> = (0..GRID_ROWS)
        .flat_map(|r| (0..GRID_COLS).map(move |c| cell_center(r, c)))
        .collect();
    let idw = IdwInterpolator::new(&stations, &targets)?;
    let values = idw.interpolate(&obs.iter().map(|o| o.weight).collect::<Vec<_>>())?;
    let mut grid = AirspaceGrid::zeros();
    for (i, v) in values.into_iter().enumerate() {
        grid.set(i / GRID_COLS, i % GRID_COLS, v);
    }
    Ok(grid)
}
