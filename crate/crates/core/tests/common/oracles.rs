use std::collections::VecDeque;

use airdelay_core::features::LatLon;

/// Discrete-event FIFO queue. Aircraft join at their scheduled quarter; each
/// quarter serves `actual[t]` aircraft plus any unused earlier service (early
/// landers). Returns summed waiting time in aircraft-minutes.
pub fn fifo_total_wait(scheduled: &[u32], actual: &[u32]) -> f64 {
    let n = scheduled.len();
    let mut queue: VecDeque<usize> = VecDeque::new();
    let mut credit = 0u32;
    let mut wait_quarters = 0usize;
    for t in 0..n {
        for _ in 0..scheduled[t] {
            queue.push_back(t);
        }
        let mut avail = actual[t] + credit;
        while avail > 0 {
            match queue.pop_front() {
                Some(joined) => {
                    wait_quarters += t - joined;
                    avail -= 1;
                }
                None => break,
            }
        }
        credit = avail;
    }
    wait_quarters += queue.iter().map(|&joined| n - joined).sum::<usize>();
    15.0 * wait_quarters as f64
}

pub fn unit(p: LatLon) -> [f64; 3] {
    let (la, lo) = (p.lat.to_radians(), p.lon.to_radians());
    [la.cos() * lo.cos(), la.cos() * lo.sin(), la.sin()]
}

pub fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

pub fn angle(a: [f64; 3], b: [f64; 3]) -> f64 {
    norm(cross(a, b)).atan2(dot(a, b))
}

/// Rotates `a` toward `b` about their common normal (Rodrigues).
pub fn rodrigues_slerp(a: LatLon, b: LatLon, f: f64) -> LatLon {
    let (u, v) = (unit(a), unit(b));
    let c = cross(u, v);
    let k = c.map(|x| x / norm(c));
    let theta = f * angle(u, v);
    let kxu = cross(k, u);
    let p: Vec<f64> = (0..3).map(|i| u[i] * theta.cos() + kxu[i] * theta.sin()).collect();
    LatLon::new(p[2].atan2(p[0].hypot(p[1])).to_degrees(), p[1].atan2(p[0]).to_degrees())
}

pub fn lon_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    d.min(360.0 - d)
}

