use super::FeatureError;
use crate::clock::QUARTER_MINUTES;

#[derive(Clone, Debug, PartialEq)]
pub struct QueueDelays {
    /// Aircraft waiting at the end of each quarter.
    pub backlog: Vec<u32>,
    /// Aircraft-minutes summed over the series.
    pub total: f64,
}

/// Deterministic queue from cumulative demand and throughput curves.
pub fn queuing_delays(scheduled: &[u32], actual: &[u32]) -> Result<QueueDelays, FeatureError> {
    if scheduled.len() != actual.len() {
        return Err(FeatureError::LengthMismatch {
            op: "queuing_delays",
            left: scheduled.len(),
            right: actual.len(),
        });
    }
    let (mut d, mut a) = (0u64, 0u64);
    let backlog: Vec<u32> = scheduled
        .iter()
        .zip(actual)
        .map(|(&s, &x)| {
            d += u64::from(s);
            a += u64::from(x);
            d.saturating_sub(a) as u32
        })
        .collect();
    let total = QUARTER_MINUTES as f64 * backlog.iter().map(|&b| f64::from(b)).sum::<f64>();
    Ok(QueueDelays { backlog, total })
}

/// Running aircraft-minutes of queueing that resets whenever `day` changes.
pub fn daily_cumulative_delay(backlog: &[u32], day: &[i64]) -> Result<Vec<f64>, FeatureError> {
    if backlog.len() != day.len() {
        return Err(FeatureError::LengthMismatch {
            op: "daily_cumulative_delay",
            left: backlog.len(),
            right: day.len(),
        });
    }
    let mut out = Vec::with_capacity(backlog.len());
    let mut acc = 0.0;
    for (i, (&b, &d)) in backlog.iter().zip(day).enumerate() {
        if i > 0 && d != day[i - 1] {
            acc = 0.0;
        }
        acc += QUARTER_MINUTES as f64 * f64::from(b);
        out.push(acc);
    }
    Ok(out)
}
