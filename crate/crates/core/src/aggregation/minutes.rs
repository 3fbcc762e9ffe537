//! Minute-by-minute defensive running curves.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::artifacts::MinuteRow;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinuteCurvePoint {
    pub minute: u32,
    pub out_of_possession_s: f64,
    /// Metres per 60 s out of possession.
    pub distance_per60: Option<f64>,
    pub hi_distance_per60: Option<f64>,
    /// Relative difference to the season mean.
    pub distance_variation: Option<f64>,
    pub hi_distance_variation: Option<f64>,
    /// Centred rolling mean of the variation series.
    pub distance_variation_smoothed: Option<f64>,
    pub hi_distance_variation_smoothed: Option<f64>,
}

/// Pools all rows by minute (sums of distance over sums of out-of-possession
/// time) and compares each minute with the time-weighted season mean.
/// Returns one point per minute from 0 to the last minute seen.
pub fn minute_curves<'a>(rows: impl IntoIterator<Item = &'a MinuteRow>, window: usize) -> Vec<MinuteCurvePoint> {
    let mut by_minute: BTreeMap<u32, (i64, f64, f64)> = BTreeMap::new();
    let mut tot = (0i64, 0.0, 0.0);
    for r in rows {
        let e = by_minute.entry(r.minute).or_default();
        e.0 += r.out_of_possession_ms;
        e.1 += r.distance_m;
        e.2 += r.hi_distance_m;
    }
    // Season totals in minute order so the sums are reproducible.
    for v in by_minute.values() {
        tot.0 += v.0;
        tot.1 += v.1;
        tot.2 += v.2;
    }
    let Some(&last) = by_minute.keys().next_back() else {
        return Vec::new();
    };
    let rate = |d: f64, ms: i64| (ms > 0).then(|| d * 60_000.0 / ms as f64);
    let mean_d = rate(tot.1, tot.0);
    let mean_hi = rate(tot.2, tot.0);
    let variation = |v: Option<f64>, m: Option<f64>| match (v, m) {
        (Some(v), Some(m)) if m > 0.0 => Some((v - m) / m),
        _ => None,
    };
    let mut points: Vec<MinuteCurvePoint> = (0..=last)
        .map(|minute| {
            let (ms, d, hi) = by_minute.get(&minute).copied().unwrap_or_default();
            let dp = rate(d, ms);
            let hp = rate(hi, ms);
            MinuteCurvePoint {
                minute,
                out_of_possession_s: ms as f64 / 1000.0,
                distance_per60: dp,
                hi_distance_per60: hp,
                distance_variation: variation(dp, mean_d),
                hi_distance_variation: variation(hp, mean_hi),
                distance_variation_smoothed: None,
                hi_distance_variation_smoothed: None,
            }
        })
        .collect();
    let dv: Vec<Option<f64>> = points.iter().map(|p| p.distance_variation).collect();
    let hv: Vec<Option<f64>> = points.iter().map(|p| p.hi_distance_variation).collect();
    let ds = centered_mean(&dv, window);
    let hs = centered_mean(&hv, window);
    for (i, p) in points.iter_mut().enumerate() {
        p.distance_variation_smoothed = ds[i];
        p.hi_distance_variation_smoothed = hs[i];
    }
    points
}

/// Centred rolling mean over present values; the window is truncated at
/// both ends. A point with no present neighbours stays absent.
pub fn centered_mean(values: &[Option<f64>], window: usize) -> Vec<Option<f64>> {
    let half = window.max(1) / 2;
    (0..values.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(values.len());
            let present: Vec<f64> = values[lo..hi].iter().flatten().copied().collect();
            (!present.is_empty()).then(|| present.iter().sum::<f64>() / present.len() as f64)
        })
        .collect()
}
