//! Speed signals and run segmentation.
//!
//! A player's positions are differenced into a raw planar speed, outliers above
//! the physical cap are interpolated away, and the result is smoothed with a
//! centered rolling mean. The smoothed signal is quantized into speed
//! categories; constant-category intervals that sit strictly below both of
//! their neighbours are valleys, and each pair of consecutive valleys
//! delimits one run.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Period, PlayerId, Point2, SpeedCategory, SpeedThresholds};

const MS_TO_KMH: f64 = 3600.0;

#[derive(Debug, Error, PartialEq)]
pub enum KinematicsError {
    #[error("player {0}: a speed signal needs at least two samples")]
    TooShort(PlayerId),
    #[error("player {player}: timestamps must be strictly increasing (at {t_ms} ms)")]
    NonIncreasingTime { player: PlayerId, t_ms: i64 },
    #[error("player {player}: gap of {gap_ms} ms at {t_ms} ms exceeds the interpolation limit")]
    GapTooLarge { player: PlayerId, t_ms: i64, gap_ms: i64 },
    #[error("player {0}: every speed sample is above the outlier cap")]
    AllInvalid(PlayerId),
    #[error("positions ({positions}) and speed samples ({samples}) differ in length")]
    LengthMismatch { positions: usize, samples: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KinematicsConfig {
    /// Centered rolling-mean width in samples (odd).
    pub smoothing_window: usize,
    pub outlier_cap_kmh: f64,
    /// Gaps up to this length are bridged linearly; longer gaps split a track.
    pub max_gap_ms: i64,
    /// Speed intervals shorter than this are merged into a neighbour.
    pub min_interval_ms: i64,
    pub nominal_dt_ms: i64,
    /// Signals shorter than this yield no runs.
    pub min_signal_ms: i64,
}

impl Default for KinematicsConfig {
    fn default() -> Self {
        Self {
            smoothing_window: 5,
            outlier_cap_kmh: 43.2,
            max_gap_ms: 500,
            min_interval_ms: 500,
            nominal_dt_ms: 100,
            min_signal_ms: 1000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimedPoint {
    pub t_ms: i64,
    pub xy: Point2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedSample {
    pub t_ms: i64,
    pub raw_kmh: f64,
    pub smoothed_kmh: f64,
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeedSignal {
    pub player_id: PlayerId,
    pub period: Period,
    pub samples: Vec<SpeedSample>,
}

impl SpeedSignal {
    pub fn duration_ms(&self, nominal_dt_ms: i64) -> i64 {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => b.t_ms - a.t_ms + nominal_dt_ms,
            _ => 0,
        }
    }

    /// Distance (m) covered between sample `i - 1` and sample `i`.
    pub fn step_m(&self, i: usize) -> f64 {
        if i == 0 {
            return 0.0;
        }
        let dt = (self.samples[i].t_ms - self.samples[i - 1].t_ms) as f64;
        self.samples[i].raw_kmh * dt / MS_TO_KMH
    }

    /// Smoothed speed at the sample closest to `t_ms`, if one lies within
    /// `tolerance_ms`.
    pub fn speed_at(&self, t_ms: i64, tolerance_ms: i64) -> Option<f64> {
        let idx = self.samples.partition_point(|s| s.t_ms < t_ms);
        let candidates = [idx.checked_sub(1), Some(idx)];
        candidates
            .into_iter()
            .flatten()
            .filter_map(|i| self.samples.get(i))
            .filter(|s| (s.t_ms - t_ms).abs() <= tolerance_ms)
            .min_by_key(|s| (s.t_ms - t_ms).abs())
            .map(|s| s.smoothed_kmh)
    }

    /// Maximum smoothed speed over samples with `t_start <= t <= t_end`.
    pub fn max_speed_between(&self, t_start: i64, t_end: i64) -> Option<f64> {
        let lo = self.samples.partition_point(|s| s.t_ms < t_start);
        let hi = self.samples.partition_point(|s| s.t_ms <= t_end);
        self.samples[lo..hi]
            .iter()
            .map(|s| s.smoothed_kmh)
            .reduce(f64::max)
    }
}

/// Splits a track wherever consecutive samples are more than `max_gap_ms`
/// apart.
pub fn split_track(track: &[TimedPoint], max_gap_ms: i64) -> Vec<&[TimedPoint]> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..track.len() {
        if track[i].t_ms - track[i - 1].t_ms > max_gap_ms {
            out.push(&track[start..i]);
            start = i;
        }
    }
    if start < track.len() {
        out.push(&track[start..]);
    }
    out
}

/// Raw planar speed between consecutive samples, outlier treatment and
/// smoothing. Gaps up to `max_gap_ms` are bridged by the linear path between
/// their end points, which is the same as dividing by the actual time step.
pub fn compute_speed(
    player_id: &PlayerId,
    period: Period,
    track: &[TimedPoint],
    cfg: &KinematicsConfig,
) -> Result<SpeedSignal, KinematicsError> {
    if track.len() < 2 {
        return Err(KinematicsError::TooShort(player_id.clone()));
    }
    let mut samples = Vec::with_capacity(track.len());
    samples.push(SpeedSample {
        t_ms: track[0].t_ms,
        raw_kmh: 0.0,
        smoothed_kmh: 0.0,
        valid: true,
    });
    for w in track.windows(2) {
        let dt = w[1].t_ms - w[0].t_ms;
        if dt <= 0 {
            return Err(KinematicsError::NonIncreasingTime {
                player: player_id.clone(),
                t_ms: w[1].t_ms,
            });
        }
        if dt > cfg.max_gap_ms {
            return Err(KinematicsError::GapTooLarge {
                player: player_id.clone(),
                t_ms: w[0].t_ms,
                gap_ms: dt,
            });
        }
        let kmh = w[0].xy.distance(w[1].xy) / dt as f64 * MS_TO_KMH;
        samples.push(SpeedSample {
            t_ms: w[1].t_ms,
            raw_kmh: kmh,
            smoothed_kmh: 0.0,
            valid: true,
        });
    }
    samples[0].raw_kmh = samples[1].raw_kmh;
    let signal = SpeedSignal {
        player_id: player_id.clone(),
        period,
        samples,
    };
    treat_outliers(signal, cfg)
}

/// Flags samples whose raw speed exceeds the cap, replaces them by linear
/// interpolation between the nearest valid neighbours (holding the edge value
/// at either end) and recomputes the smoothed speed.
pub fn treat_outliers(mut signal: SpeedSignal, cfg: &KinematicsConfig) -> Result<SpeedSignal, KinematicsError> {
    let n = signal.samples.len();
    for s in &mut signal.samples {
        if s.raw_kmh > cfg.outlier_cap_kmh || !s.raw_kmh.is_finite() {
            s.valid = false;
        }
    }
    let valid: Vec<usize> = (0..n).filter(|&i| signal.samples[i].valid).collect();
    if valid.is_empty() {
        return Err(KinematicsError::AllInvalid(signal.player_id));
    }
    if valid.len() < n {
        let mut next = 0;
        for i in 0..n {
            if signal.samples[i].valid {
                continue;
            }
            while next < valid.len() && valid[next] < i {
                next += 1;
            }
            let before = next.checked_sub(1).map(|k| valid[k]);
            let after = valid.get(next).copied();
            let value = match (before, after) {
                (Some(a), Some(b)) => {
                    let (sa, sb) = (&signal.samples[a], &signal.samples[b]);
                    let frac = (signal.samples[i].t_ms - sa.t_ms) as f64 / (sb.t_ms - sa.t_ms) as f64;
                    sa.raw_kmh + (sb.raw_kmh - sa.raw_kmh) * frac
                }
                (Some(a), None) => signal.samples[a].raw_kmh,
                (None, Some(b)) => signal.samples[b].raw_kmh,
                (None, None) => unreachable!("at least one valid sample exists"),
            };
            signal.samples[i].raw_kmh = value;
        }
    }
    let raw: Vec<f64> = signal.samples.iter().map(|s| s.raw_kmh).collect();
    for (s, v) in signal.samples.iter_mut().zip(rolling_mean(&raw, cfg.smoothing_window)) {
        s.smoothed_kmh = v.max(0.0);
    }
    Ok(signal)
}

/// Centered rolling mean; the window is truncated at the series edges.
pub fn rolling_mean(values: &[f64], window: usize) -> Vec<f64> {
    let half = window.max(1) / 2;
    let mut prefix = Vec::with_capacity(values.len() + 1);
    prefix.push(0.0);
    for v in values {
        prefix.push(prefix.last().unwrap() + v);
    }
    (0..values.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(values.len());
            // Summing directly keeps constant signals exact.
            if hi - lo <= 16 {
                values[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
            } else {
                (prefix[hi] - prefix[lo]) / (hi - lo) as f64
            }
        })
        .collect()
}

/// One valley-to-valley effort.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEffort {
    pub player_id: PlayerId,
    pub period: Period,
    pub t_valley_end: i64,
    pub t_peak_start: i64,
    pub t_peak_end: i64,
    pub t_next_valley_start: i64,
    pub origin: Point2,
    pub destination: Point2,
    pub peak_speed: f64,
    pub distance_total: f64,
    pub distance_hi: f64,
    pub is_hi: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Interval {
    start: usize,
    end: usize,
    bin: SpeedCategory,
}

/// Constant-category intervals of the smoothed signal after merging the ones
/// shorter than `min_interval_ms` into the neighbour with the closer
/// category (the earlier neighbour on ties). The shortest offending interval
/// is merged first.
fn speed_intervals(signal: &SpeedSignal, thresholds: &SpeedThresholds, cfg: &KinematicsConfig) -> Vec<Interval> {
    let samples = &signal.samples;
    let mut raw_intervals: Vec<Interval> = Vec::new();
    for (i, s) in samples.iter().enumerate() {
        let bin = thresholds.bin(s.smoothed_kmh);
        match raw_intervals.last_mut() {
            Some(last) if last.bin == bin => last.end = i,
            _ => raw_intervals.push(Interval { start: i, end: i, bin }),
        }
    }
    let duration = |iv: &Interval| samples[iv.end].t_ms - samples[iv.start].t_ms + cfg.nominal_dt_ms;

    let mut by_start: BTreeMap<usize, Interval> = raw_intervals.iter().map(|iv| (iv.start, *iv)).collect();
    let mut short: BTreeSet<(i64, usize)> = raw_intervals
        .iter()
        .filter(|iv| duration(iv) < cfg.min_interval_ms)
        .map(|iv| (duration(iv), iv.start))
        .collect();

    while by_start.len() > 1 {
        let Some(&(dur, key)) = short.iter().next() else { break };
        short.remove(&(dur, key));
        let iv = by_start[&key];
        let left = by_start.range(..key).next_back().map(|(_, v)| *v);
        let right = by_start.range(key + 1..).next().map(|(_, v)| *v);
        let diff = |other: &Interval| (other.bin as i32 - iv.bin as i32).abs();
        let target = match (left, right) {
            (Some(l), Some(r)) => {
                if diff(&l) <= diff(&r) {
                    l
                } else {
                    r
                }
            }
            (Some(l), None) => l,
            (None, Some(r)) => r,
            (None, None) => break,
        };
        by_start.remove(&key);
        by_start.remove(&target.start);
        short.remove(&(duration(&target), target.start));
        let mut merged = Interval {
            start: iv.start.min(target.start),
            end: iv.end.max(target.end),
            bin: target.bin,
        };
        // Absorbing a short interval can leave two equal-category
        // neighbours adjacent; join them.
        if let Some((_, l)) = by_start.range(..merged.start).next_back().map(|(k, v)| (*k, *v)) {
            if l.bin == merged.bin {
                by_start.remove(&l.start);
                short.remove(&(duration(&l), l.start));
                merged.start = l.start;
            }
        }
        if let Some((_, r)) = by_start.range(merged.start + 1..).next().map(|(k, v)| (*k, *v)) {
            if r.bin == merged.bin {
                by_start.remove(&r.start);
                short.remove(&(duration(&r), r.start));
                merged.end = r.end;
            }
        }
        let d = duration(&merged);
        if d < cfg.min_interval_ms {
            short.insert((d, merged.start));
        }
        by_start.insert(merged.start, merged);
    }
    by_start.into_values().collect()
}

/// Segments a smoothed, outlier-treated signal into runs.
///
/// `positions` must be aligned with `signal.samples`.
pub fn segment_runs(
    signal: &SpeedSignal,
    positions: &[Point2],
    thresholds: &SpeedThresholds,
    cfg: &KinematicsConfig,
) -> Result<Vec<RunEffort>, KinematicsError> {
    let samples = &signal.samples;
    if positions.len() != samples.len() {
        return Err(KinematicsError::LengthMismatch {
            positions: positions.len(),
            samples: samples.len(),
        });
    }
    if samples.is_empty() || signal.duration_ms(cfg.nominal_dt_ms) < cfg.min_signal_ms {
        return Ok(Vec::new());
    }
    let intervals = speed_intervals(signal, thresholds, cfg);
    let valleys: Vec<usize> = (0..intervals.len())
        .filter(|&k| {
            let bin = intervals[k].bin;
            let below_left = k == 0 || bin < intervals[k - 1].bin;
            let below_right = k + 1 == intervals.len() || bin < intervals[k + 1].bin;
            below_left && below_right
        })
        .collect();

    let hi = thresholds.high_intensity();
    let mut runs = Vec::with_capacity(valleys.len().saturating_sub(1));
    for pair in valleys.windows(2) {
        let (va, vb) = (intervals[pair[0]], intervals[pair[1]]);
        let interior = &intervals[pair[0] + 1..pair[1]];
        if interior.is_empty() {
            continue;
        }
        let top_bin = interior.iter().map(|iv| iv.bin).max().expect("interior is non-empty");
        let interval_max = |iv: &Interval| {
            samples[iv.start..=iv.end]
                .iter()
                .map(|s| s.smoothed_kmh)
                .fold(f64::NEG_INFINITY, f64::max)
        };
        let mut peak = None::<(Interval, f64)>;
        for iv in interior.iter().filter(|iv| iv.bin == top_bin) {
            let m = interval_max(iv);
            if peak.is_none_or(|(_, best)| m > best) {
                peak = Some((*iv, m));
            }
        }
        let (peak, _) = peak.expect("top bin interval exists");

        let (a, b) = (va.end, vb.start);
        let peak_speed = samples[a..=b]
            .iter()
            .map(|s| s.smoothed_kmh)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut distance_total = 0.0;
        let mut distance_hi = 0.0;
        for i in a + 1..=peak.end {
            let step = signal.step_m(i);
            distance_total += step;
            if samples[i].smoothed_kmh >= hi {
                distance_hi += step;
            }
        }
        runs.push(RunEffort {
            player_id: signal.player_id.clone(),
            period: signal.period,
            t_valley_end: samples[a].t_ms,
            t_peak_start: samples[peak.start].t_ms,
            t_peak_end: samples[peak.end].t_ms,
            t_next_valley_start: samples[b].t_ms,
            origin: positions[a],
            destination: positions[peak.end],
            peak_speed,
            distance_total,
            distance_hi,
            is_hi: peak_speed >= hi,
        });
    }
    Ok(runs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pid() -> PlayerId {
        PlayerId::new("p")
    }

    /// Positions sampled at 10 Hz from a piecewise-constant-acceleration
    /// speed profile along +x. `phases` are (duration s, accel m/s²).
    fn profile_track(v0: f64, phases: &[(f64, f64)]) -> Vec<TimedPoint> {
        let total: f64 = phases.iter().map(|p| p.0).sum();
        let n = (total * 10.0).round() as usize;
        (0..=n)
            .map(|k| {
                let t = k as f64 / 10.0;
                let (mut x, mut v, mut rem) = (0.0, v0, t);
                for &(d, a) in phases {
                    let dt = rem.min(d);
                    x += v * dt + 0.5 * a * dt * dt;
                    v += a * dt;
                    rem -= dt;
                    if rem <= 0.0 {
                        break;
                    }
                }
                TimedPoint {
                    t_ms: (k as i64) * 100,
                    xy: Point2::new(x, 10.0),
                }
            })
            .collect()
    }

    fn signal_of(track: &[TimedPoint]) -> SpeedSignal {
        compute_speed(&pid(), Period::First, track, &KinematicsConfig::default()).unwrap()
    }

    #[test]
    fn stationary_player_has_zero_speed() {
        let track: Vec<_> = (0..30)
            .map(|k| TimedPoint {
                t_ms: k * 100,
                xy: Point2::new(20.0, 20.0),
            })
            .collect();
        let s = signal_of(&track);
        assert!(s.samples.iter().all(|x| x.raw_kmh == 0.0 && x.smoothed_kmh == 0.0));
    }

    #[test]
    fn uniform_motion_is_eighteen_kmh() {
        let track: Vec<_> = (0..40)
            .map(|k| TimedPoint {
                t_ms: k * 100,
                xy: Point2::new(0.5 * k as f64, 5.0),
            })
            .collect();
        let s = signal_of(&track);
        for x in &s.samples {
            assert!((x.raw_kmh - 18.0).abs() < 1e-9);
            assert!((x.smoothed_kmh - 18.0).abs() < 1e-9);
        }
    }

    #[test]
    fn teleport_is_flagged_and_interpolated() {
        let mut track: Vec<_> = (0..30)
            .map(|k| TimedPoint {
                t_ms: k * 100,
                xy: Point2::new(0.25 * k as f64, 5.0),
            })
            .collect();
        track[15].xy.y += 30.0;
        let s = signal_of(&track);
        // Both steps touching the displaced frame exceed 43.2 km/h.
        for i in [15, 16] {
            assert!(s.samples[i].raw_kmh.is_finite());
            assert!(!s.samples[i].valid, "sample {i} should be flagged");
            assert!((s.samples[i].raw_kmh - 9.0).abs() < 1e-9);
        }
        assert_eq!(s.samples.iter().filter(|x| !x.valid).count(), 2);
    }

    fn bare_signal(raw: &[f64]) -> SpeedSignal {
        SpeedSignal {
            player_id: pid(),
            period: Period::First,
            samples: raw
                .iter()
                .enumerate()
                .map(|(i, &v)| SpeedSample {
                    t_ms: i as i64 * 100,
                    raw_kmh: v,
                    smoothed_kmh: 0.0,
                    valid: true,
                })
                .collect(),
        }
    }

    #[test]
    fn no_outliers_leaves_raw_unchanged() {
        let raw = [3.0, 5.0, 8.0, 12.0, 7.0, 4.0];
        let s = treat_outliers(bare_signal(&raw), &KinematicsConfig::default()).unwrap();
        for (x, r) in s.samples.iter().zip(raw) {
            assert_eq!(x.raw_kmh, r);
            assert!(x.valid);
        }
    }

    #[test]
    fn spike_is_interpolated_from_neighbours() {
        let s = treat_outliers(bare_signal(&[10.0, 10.0, 60.0, 10.0, 10.0]), &KinematicsConfig::default()).unwrap();
        assert!(!s.samples[2].valid);
        assert_eq!(s.samples[2].raw_kmh, 10.0);
        // Oracle: linear interpolation between (t=0, 4) and (t=300, 10).
        let s = treat_outliers(bare_signal(&[4.0, 50.0, 50.0, 10.0]), &KinematicsConfig::default()).unwrap();
        assert!((s.samples[1].raw_kmh - 6.0).abs() < 1e-12);
        assert!((s.samples[2].raw_kmh - 8.0).abs() < 1e-12);
    }

    #[test]
    fn leading_spike_holds_first_valid_value() {
        let s = treat_outliers(bare_signal(&[70.0, 80.0, 12.0, 14.0]), &KinematicsConfig::default()).unwrap();
        assert_eq!(s.samples[0].raw_kmh, 12.0);
        assert_eq!(s.samples[1].raw_kmh, 12.0);
    }

    #[test]
    fn all_invalid_is_an_error() {
        let err = treat_outliers(bare_signal(&[50.0, 60.0]), &KinematicsConfig::default()).unwrap_err();
        assert_eq!(err, KinematicsError::AllInvalid(pid()));
    }

    #[test]
    fn singleton_track_is_rejected() {
        let track = [TimedPoint {
            t_ms: 0,
            xy: Point2::default(),
        }];
        assert!(matches!(
            compute_speed(&pid(), Period::First, &track, &KinematicsConfig::default()),
            Err(KinematicsError::TooShort(_))
        ));
        assert!(matches!(
            compute_speed(&pid(), Period::First, &[], &KinematicsConfig::default()),
            Err(KinematicsError::TooShort(_))
        ));
    }

    #[test]
    fn split_track_at_large_gaps() {
        let mk = |t| TimedPoint {
            t_ms: t,
            xy: Point2::default(),
        };
        let track = [mk(0), mk(100), mk(600), mk(1700), mk(1800)];
        let parts = split_track(&track, 500);
        assert_eq!(parts.len(), 2);
        assert_eq!(parts[0].len(), 3);
        assert_eq!(parts[1].len(), 2);
    }

    #[test]
    fn small_gap_is_bridged_linearly() {
        let mk = |t, x| TimedPoint {
            t_ms: t,
            xy: Point2::new(x, 0.0),
        };
        // 300 ms gap covering 1.5 m: same 18 km/h as the rest.
        let track = [mk(0, 0.0), mk(100, 0.5), mk(400, 2.0), mk(500, 2.5)];
        let s = signal_of(&track);
        assert!(s.samples.iter().all(|x| (x.raw_kmh - 18.0).abs() < 1e-9));
        let too_far = [mk(0, 0.0), mk(700, 0.5)];
        assert!(matches!(
            compute_speed(&pid(), Period::First, &too_far, &KinematicsConfig::default()),
            Err(KinematicsError::GapTooLarge { .. })
        ));
    }

    #[test]
    fn constant_speed_has_no_runs() {
        let track: Vec<_> = (0..100)
            .map(|k| TimedPoint {
                t_ms: k * 100,
                xy: Point2::new(0.3 * k as f64, 0.0),
            })
            .collect();
        let s = signal_of(&track);
        let pos: Vec<_> = track.iter().map(|p| p.xy).collect();
        let runs = segment_runs(&s, &pos, &SpeedThresholds::default(), &KinematicsConfig::default()).unwrap();
        assert!(runs.is_empty());
    }

    #[test]
    fn short_signal_has_no_runs() {
        let track = profile_track(0.0, &[(0.5, 3.0)]);
        let s = signal_of(&track);
        let pos: Vec<_> = track.iter().map(|p| p.xy).collect();
        let runs = segment_runs(&s, &pos, &SpeedThresholds::default(), &KinematicsConfig::default()).unwrap();
        assert!(runs.is_empty());
    }

    #[test]
    fn trapezoid_gives_one_hi_run() {
        let a = 3.0;
        let cruise = 25.0 / 3.6;
        let ramp = cruise / a;
        let track = profile_track(0.0, &[(1.0, 0.0), (ramp, a), (2.0, 0.0), (ramp, -a), (1.5, 0.0)]);
        let s = signal_of(&track);
        let pos: Vec<_> = track.iter().map(|p| p.xy).collect();
        let runs = segment_runs(&s, &pos, &SpeedThresholds::default(), &KinematicsConfig::default()).unwrap();
        assert_eq!(runs.len(), 1);
        let r = &runs[0];
        assert!(r.is_hi);
        assert!((r.peak_speed - 25.0).abs() < 1e-6);

        // Closed form: on the ramp a 10 Hz difference equals the speed at the
        // step midpoint, and the centered 5-sample mean of a linear signal is
        // that same midpoint speed. The smoothed signal first reaches 21 km/h
        // at the first sample t with a·(t − 0.05 − 1.0) ≥ 21/3.6.
        let crossing = 1.0 + 21.0 / 3.6 / a + 0.05;
        let expected_ms = ((crossing * 10.0).ceil() * 100.0) as i64;
        assert_eq!(r.t_peak_start, expected_ms);
        assert!(r.distance_hi <= r.distance_total);
        assert!(r.t_valley_end <= r.t_peak_start);
        assert!(r.t_peak_end <= r.t_next_valley_start);
        assert_eq!(r.origin, pos[s.samples.iter().position(|x| x.t_ms == r.t_valley_end).unwrap()]);
    }

    #[test]
    fn hi_boundary_uses_greater_or_equal() {
        for (peak, expect) in [(21.0, true), (20.9, false)] {
            let mut raw = vec![2.0; 20];
            raw.extend(vec![peak; 20]);
            raw.extend(vec![2.0; 20]);
            let mut sig = bare_signal(&raw);
            for s in &mut sig.samples {
                s.smoothed_kmh = s.raw_kmh;
            }
            let pos = vec![Point2::default(); sig.samples.len()];
            let runs = segment_runs(&sig, &pos, &SpeedThresholds::default(), &KinematicsConfig::default()).unwrap();
            assert_eq!(runs.len(), 1);
            assert_eq!(runs[0].is_hi, expect, "peak {peak}");
        }
    }

    #[test]
    fn short_interval_merges_into_closer_bin() {
        // A 200 ms sprint blip between walking and jogging joins jogging,
        // the closer category.
        let mut smoothed = vec![2.0; 10];
        smoothed.extend([22.0, 22.0]);
        smoothed.extend(vec![8.0; 10]);
        let mut sig = bare_signal(&smoothed);
        for s in &mut sig.samples {
            s.smoothed_kmh = s.raw_kmh;
        }
        let ivs = speed_intervals(&sig, &SpeedThresholds::default(), &KinematicsConfig::default());
        assert_eq!(ivs.len(), 2);
        assert_eq!(ivs[1].bin, SpeedCategory::Jogging);
        assert_eq!(ivs[1].start, 10);
    }

    #[test]
    fn merge_tie_prefers_earlier_neighbour() {
        let mut smoothed = vec![2.0; 10];
        smoothed.extend([16.0, 16.0]);
        smoothed.extend(vec![23.0; 10]);
        let mut sig = bare_signal(&smoothed);
        for s in &mut sig.samples {
            s.smoothed_kmh = s.raw_kmh;
        }
        // Running blip between jogging and sprinting: one category from
        // each side, so the earlier neighbour wins.
        sig.samples[..10].iter_mut().for_each(|s| s.smoothed_kmh = 8.0);
        let ivs = speed_intervals(&sig, &SpeedThresholds::default(), &KinematicsConfig::default());
        assert_eq!(ivs.len(), 2);
        assert_eq!(ivs[0].bin, SpeedCategory::Jogging);
        assert_eq!(ivs[0].end, 11);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let sig = bare_signal(&[1.0; 20]);
        assert!(matches!(
            segment_runs(&sig, &[], &SpeedThresholds::default(), &KinematicsConfig::default()),
            Err(KinematicsError::LengthMismatch { .. })
        ));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        /// Smooth random speed traces that start and end walking.
        fn arb_profile() -> impl Strategy<Value = Vec<(f64, f64)>> {
            proptest::collection::vec((0.3f64..3.0, -4.0f64..4.0), 2..12).prop_map(|mut phases| {
                // Integrate and clamp so the speed never goes negative or past
                // 35 km/h, then bring it back to rest.
                let mut v = 0.5;
                for p in phases.iter_mut() {
                    let end = (v + p.0 * p.1).clamp(0.0, 9.5);
                    p.1 = (end - v) / p.0;
                    v = end;
                }
                phases.push((2.0, -v / 2.0));
                phases.push((1.5, 0.0));
                phases.insert(0, (1.5, 0.0));
                phases
            })
        }

        proptest! {
            #[test]
            fn run_invariants(phases in arb_profile(), shift in 0i64..100_000) {
                let track = profile_track(0.5, &phases);
                let cfg = KinematicsConfig::default();
                let th = SpeedThresholds::default();
                let s = signal_of(&track);
                let pos: Vec<_> = track.iter().map(|p| p.xy).collect();
                let runs = segment_runs(&s, &pos, &th, &cfg).unwrap();

                for w in runs.windows(2) {
                    prop_assert!(w[0].t_next_valley_start <= w[1].t_valley_end);
                }
                for r in &runs {
                    prop_assert!(r.t_valley_end <= r.t_peak_start);
                    prop_assert!(r.t_peak_start <= r.t_peak_end);
                    prop_assert!(r.t_peak_end <= r.t_next_valley_start);
                    prop_assert!(r.distance_hi <= r.distance_total);
                    prop_assert_eq!(r.is_hi, r.peak_speed >= 21.0);
                    prop_assert_eq!(Some(r.peak_speed), s.max_speed_between(r.t_valley_end, r.t_next_valley_start));
                }
                for x in s.samples.iter().filter(|x| x.smoothed_kmh >= 21.0) {
                    let covering = runs.iter()
                        .filter(|r| r.t_valley_end <= x.t_ms && x.t_ms <= r.t_next_valley_start)
                        .count();
                    prop_assert_eq!(covering, 1);
                }
                let path: f64 = track.windows(2).map(|w| w[0].xy.distance(w[1].xy)).sum();
                let covered: f64 = runs.iter().map(|r| r.distance_total).sum();
                prop_assert!(covered <= path * (1.0 + 1e-6) + 1e-9);

                // Time translation and pitch reflection leave segmentation unchanged.
                let moved: Vec<_> = track.iter().map(|p| TimedPoint {
                    t_ms: p.t_ms + shift,
                    xy: Point2::new(105.0 - p.xy.x, 68.0 - p.xy.y),
                }).collect();
                let s2 = signal_of(&moved);
                let pos2: Vec<_> = moved.iter().map(|p| p.xy).collect();
                let runs2 = segment_runs(&s2, &pos2, &th, &cfg).unwrap();
                prop_assert_eq!(runs.len(), runs2.len());
                for (a, b) in runs.iter().zip(&runs2) {
                    prop_assert_eq!(a.t_peak_start + shift, b.t_peak_start);
                    prop_assert_eq!(a.t_valley_end + shift, b.t_valley_end);
                    prop_assert!((a.peak_speed - b.peak_speed).abs() < 1e-9);
                }
            }
        }
    }
}
