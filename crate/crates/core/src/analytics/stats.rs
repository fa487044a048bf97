//! Order statistics shared by the analytics.

use crate::error::{Error, Result};

/// Median of durations in seconds, reported in minutes. For an even count
/// the two middle values are averaged. Sorts `seconds` in place.
pub fn median_minutes(seconds: &mut [i64]) -> Option<f64> {
    if seconds.is_empty() {
        return None;
    }
    seconds.sort_unstable();
    let n = seconds.len();
    let m = n / 2;
    Some(if n % 2 == 1 {
        seconds[m] as f64 / 60.0
    } else {
        (seconds[m - 1] + seconds[m]) as f64 / 120.0
    })
}

/// Median of arbitrary values with the same even-count convention.
pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_unstable_by(f64::total_cmp);
    let n = values.len();
    let m = n / 2;
    Some(if n % 2 == 1 {
        values[m]
    } else {
        (values[m - 1] + values[m]) / 2.0
    })
}

/// 1-based nearest rank for percentile `p` of `n` values: `ceil(p/100 * n)`,
/// at least 1.
pub fn nearest_rank(p: f64, n: usize) -> Result<usize> {
    if n == 0 {
        return Err(Error::Data("percentile of an empty distribution".into()));
    }
    if !(0.0..=100.0).contains(&p) {
        return Err(Error::config(format!("percentile {p} outside [0, 100]")));
    }
    // p * n / 100 in exact integer arithmetic when p is a whole number
    let rank = if p.fract() == 0.0 {
        (p as usize * n).div_ceil(100)
    } else {
        (p / 100.0 * n as f64).ceil() as usize
    };
    Ok(rank.clamp(1, n))
}

/// Smallest value whose cumulative share reaches `p` percent.
pub fn nearest_rank_percentile<T: Copy + PartialOrd>(values: &[T], p: f64) -> Result<T> {
    let rank = nearest_rank(p, values.len())?;
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).expect("comparable values"));
    Ok(sorted[rank - 1])
}
