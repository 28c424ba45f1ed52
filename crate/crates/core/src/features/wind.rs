/// Splits a wind report into runway-relative components: headwind along the
/// runway heading (negative means tailwind) and unsigned crosswind.
pub fn wind_components(speed_kt: f64, dir_from_deg: f64, runway_heading_deg: f64) -> (f64, f64) {
    let delta = (dir_from_deg - runway_heading_deg).to_radians();
    (speed_kt * delta.cos(), (speed_kt * delta.sin()).abs())
}
