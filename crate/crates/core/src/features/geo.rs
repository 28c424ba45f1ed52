use serde::{Deserialize, Serialize};

use super::FeatureError;
use crate::clock::UtcMinute;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatLon {
    pub lat: f64,
    pub lon: f64,
}

impl LatLon {
    pub fn new(lat: f64, lon: f64) -> Self {
        Self { lat, lon }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrackPoint {
    pub minute: UtcMinute,
    pub pos: LatLon,
}

/// Angular separation in radians (haversine form).
pub fn central_angle(a: LatLon, b: LatLon) -> f64 {
    let (p1, p2) = (a.lat.to_radians(), b.lat.to_radians());
    let dp = p2 - p1;
    let dl = (b.lon - a.lon).to_radians();
    let h = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * h.sqrt().min(1.0).asin()
}

fn unit(p: LatLon) -> [f64; 3] {
    let (lat, lon) = (p.lat.to_radians(), p.lon.to_radians());
    [lat.cos() * lon.cos(), lat.cos() * lon.sin(), lat.sin()]
}

/// Point at `fraction` of the arc length from `a` toward `b`.
pub fn interpolate_great_circle(a: LatLon, b: LatLon, fraction: f64) -> Result<LatLon, FeatureError> {
    let (u, v) = (unit(a), unit(b));
    let cross = [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ];
    let sin_d = cross.iter().map(|c| c * c).sum::<f64>().sqrt();
    let cos_d = u.iter().zip(&v).map(|(x, y)| x * y).sum::<f64>();
    if sin_d < 1e-12 {
        if cos_d < 0.0 {
            return Err(FeatureError::Antipodal(a, b));
        }
        return Ok(a);
    }
    if fraction == 0.0 {
        return Ok(a);
    }
    if fraction == 1.0 {
        return Ok(b);
    }
    let d = sin_d.atan2(cos_d);
    let wa = ((1.0 - fraction) * d).sin() / sin_d;
    let wb = (fraction * d).sin() / sin_d;
    let p: Vec<f64> = u.iter().zip(&v).map(|(x, y)| wa * x + wb * y).collect();
    let lat = p[2].atan2(p[0].hypot(p[1])).to_degrees();
    let lon = p[1].atan2(p[0]).to_degrees();
    Ok(LatLon { lat, lon })
}

/// Positions at every `step_minutes` boundary strictly between departure and
/// arrival, assuming constant ground speed.
pub fn great_circle_track(
    origin: LatLon,
    dest: LatLon,
    dep: UtcMinute,
    arr: UtcMinute,
    step_minutes: i64,
) -> Result<Vec<TrackPoint>, FeatureError> {
    if arr <= dep {
        return Err(FeatureError::Invalid(format!("arrival {arr} not after departure {dep}")));
    }
    if step_minutes <= 0 {
        return Err(FeatureError::Invalid(format!("step {step_minutes} must be positive")));
    }
    // surface the antipodal error even for flights shorter than one step
    interpolate_great_circle(origin, dest, 0.5)?;
    let span = (arr - dep) as f64;
    let mut t = (dep.div_euclid(step_minutes) + 1) * step_minutes;
    let mut out = Vec::new();
    while t < arr {
        let pos = interpolate_great_circle(origin, dest, (t - dep) as f64 / span)?;
        out.push(TrackPoint { minute: t, pos });
        t += step_minutes;
    }
    Ok(out)
}
