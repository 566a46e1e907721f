use super::FrontierSnapshot;

/// Sample standard deviation of the given means; `None` below two values.
pub fn frontier_spread(means: &[f64]) -> Option<f64> {
    if means.len() < 2 {
        return None;
    }
    let n = means.len() as f64;
    let mean = means.iter().sum::<f64>() / n;
    let ss: f64 = means.iter().map(|m| (m - mean) * (m - mean)).sum();
    Some((ss / (n - 1.0)).sqrt())
}

/// Variance-scaled bias estimate `c_bias * sd(active means)`.
///
/// Returns `None` while fewer than two active arms have been sampled; callers
/// fall back to the static bound.
pub fn estimate_dynamic_bias(snapshot: &FrontierSnapshot, c_bias: f64) -> Option<f64> {
    let means: Vec<f64> = snapshot.stats.iter().filter_map(|s| s.mean()).collect();
    frontier_spread(&means).map(|s| c_bias * s)
}
