use serde::{Deserialize, Serialize};

use super::{per30, AggregationConfig, TeamPartial};
use crate::model::TeamId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeamStyle {
    pub team_id: TeamId,
    pub matches: usize,
    /// False when fewer matches than the configured minimum were seen.
    pub enough_matches: bool,
    pub minutes_in_possession: f64,
    pub minutes_out_of_possession: f64,
    /// In-possession over ball-in-play time.
    pub possession_pct: Option<f64>,
    /// Direct-play time over in-possession time.
    pub direct_play_share: Option<f64>,
    /// High-pressure time over out-of-possession time.
    pub high_press_share: Option<f64>,
    pub hi_distance_in_per30: Option<f64>,
    pub hi_distance_out_per30: Option<f64>,
    pub distance_in_per30: Option<f64>,
    pub distance_out_per30: Option<f64>,
    /// Mean per-match expected goals difference, when supplied.
    pub xg_diff: Option<f64>,
}

fn ratio(num: i64, den: i64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn team_style(team: &TeamId, p: &TeamPartial, cfg: &AggregationConfig) -> TeamStyle {
    let t = &p.time;
    TeamStyle {
        team_id: team.clone(),
        matches: p.matches.len(),
        enough_matches: p.matches.len() >= cfg.min_team_matches,
        minutes_in_possession: t.in_possession_ms as f64 / 60_000.0,
        minutes_out_of_possession: t.out_of_possession_ms as f64 / 60_000.0,
        possession_pct: ratio(t.in_possession_ms, t.effective_ms()),
        direct_play_share: ratio(p.direct_play_ms, t.in_possession_ms),
        high_press_share: ratio(p.high_press_ms, t.out_of_possession_ms),
        hi_distance_in_per30: per30(p.hi_distance_in, t.in_possession_ms),
        hi_distance_out_per30: per30(p.hi_distance_out, t.out_of_possession_ms),
        distance_in_per30: per30(p.distance_in, t.in_possession_ms),
        distance_out_per30: per30(p.distance_out, t.out_of_possession_ms),
        xg_diff: (p.xg_matches > 0).then(|| p.xg_diff_sum / p.xg_matches as f64),
    }
}

/// Metric columns used for the style PCA by default.
pub const STYLE_COLUMNS: [&str; 7] = [
    "possession_pct",
    "direct_play_share",
    "high_press_share",
    "hi_distance_in_per30",
    "hi_distance_out_per30",
    "distance_in_per30",
    "distance_out_per30",
];

impl TeamStyle {
    pub fn metric(&self, name: &str) -> Option<f64> {
        match name {
            "possession_pct" => self.possession_pct,
            "direct_play_share" => self.direct_play_share,
            "high_press_share" => self.high_press_share,
            "hi_distance_in_per30" => self.hi_distance_in_per30,
            "hi_distance_out_per30" => self.hi_distance_out_per30,
            "distance_in_per30" => self.distance_in_per30,
            "distance_out_per30" => self.distance_out_per30,
            "xg_diff" => self.xg_diff,
            _ => None,
        }
    }
}
