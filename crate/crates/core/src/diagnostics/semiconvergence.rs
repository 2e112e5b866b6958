use serde::{Deserialize, Serialize};

/// Width of the centered moving average applied before locating the minimum.
pub const SMOOTHING_WIDTH: usize = 5;
/// Growth is flagged when the tail mean exceeds this multiple of the minimum.
pub const GROWTH_FACTOR: f64 = 1.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Semiconvergence {
    /// Index of the minimum of the smoothed series.
    pub index: usize,
    /// Smoothed value at `index`.
    pub minimum: f64,
    /// Mean of the smoothed series over the last quarter.
    pub tail_mean: f64,
    pub growth: bool,
}

impl Semiconvergence {
    /// The minimum lies strictly inside the series and growth follows it.
    pub fn is_interior(&self, len: usize) -> bool {
        self.growth && self.index > 0 && self.index + 1 < len
    }
}

/// Centered moving average, truncated at both ends.
pub fn moving_average(v: &[f64], width: usize) -> Vec<f64> {
    let half = width / 2;
    (0..v.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(v.len());
            v[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

/// Locates the minimum of an error series and checks for later growth.
///
/// The tail is the last quarter of the series (at least one point); growth
/// needs the minimum to lie before the tail.
pub fn detect_semiconvergence(series: &[f64]) -> Semiconvergence {
    if series.is_empty() {
        return Semiconvergence {
            index: 0,
            minimum: f64::NAN,
            tail_mean: f64::NAN,
            growth: false,
        };
    }
    let sm = moving_average(series, SMOOTHING_WIDTH);
    let mut index = 0;
    for (i, v) in sm.iter().enumerate() {
        if *v < sm[index] {
            index = i;
        }
    }
    let n = sm.len();
    let tail_start = n - (n / 4).max(1);
    let tail = &sm[tail_start..];
    let tail_mean = tail.iter().sum::<f64>() / tail.len() as f64;
    let minimum = sm[index];
    Semiconvergence {
        index,
        minimum,
        tail_mean,
        growth: n >= 3 && index < tail_start && tail_mean > GROWTH_FACTOR * minimum,
    }
}
