use super::FeatureError;

/// Centered three-point moving average; the window shrinks to the in-range
/// neighbours at both ends.
pub fn smooth_delays(series: &[f64]) -> Result<Vec<f64>, FeatureError> {
    if series.is_empty() {
        return Err(FeatureError::Empty("smooth_delays"));
    }
    let n = series.len();
    Ok((0..n)
        .map(|t| {
            let lo = t.saturating_sub(1);
            let hi = (t + 1).min(n - 1);
            let window = &series[lo..=hi];
            window.iter().sum::<f64>() / window.len() as f64
        })
        .collect())
}
