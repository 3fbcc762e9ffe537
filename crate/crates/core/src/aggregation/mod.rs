//! Effective-time normalization and season profiles.
//!
//! Per-match artifacts are reduced into partials keyed by (player, role) and
//! by team. Partials are built in parallel and merged in match-id order so
//! floating point sums do not depend on the worker count.

pub mod lineup;
pub mod minutes;
pub mod pca;
pub mod team;

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::artifacts::{MatchArtifacts, PhaseKind};
use crate::model::{PlayerId, Role, SpeedCategory, TeamId};
use crate::tactical::MovementType;
use crate::valuation::{fit_influence, RunInfluenceModel, RunValueSample};

pub use lineup::{compare_lineups, lineup_aggregate, LineupComparison, LineupEntry, LineupError, LineupGap, LineupTotals};
pub use minutes::{minute_curves, MinuteCurvePoint};
pub use pca::{style_pca, PcaError, PcaResult};
pub use team::{team_style, TeamStyle};

const PER30_MS: f64 = 1_800_000.0;
const PER60_MS: f64 = 3_600_000.0;

/// Time base of a normalized metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormBase {
    InPossession,
    OutOfPossession,
    /// Ball-in-play time regardless of possession, scaled per 60 minutes.
    Effective,
}

/// Milliseconds spent in each phase.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseTime {
    pub in_possession_ms: i64,
    pub out_of_possession_ms: i64,
    pub out_of_play_ms: i64,
}

impl PhaseTime {
    pub fn effective_ms(&self) -> i64 {
        self.in_possession_ms + self.out_of_possession_ms
    }
}

/// Rate per 30 minutes (phase bases) or per 60 effective minutes. Absent
/// when the base time is zero.
pub fn normalize(value: f64, base: NormBase, time: &PhaseTime) -> Option<f64> {
    match base {
        NormBase::InPossession => per30(value, time.in_possession_ms),
        NormBase::OutOfPossession => per30(value, time.out_of_possession_ms),
        NormBase::Effective => per_ms(value, time.effective_ms(), PER60_MS),
    }
}

pub fn per30(value: f64, phase_ms: i64) -> Option<f64> {
    per_ms(value, phase_ms, PER30_MS)
}

fn per_ms(value: f64, ms: i64, unit: f64) -> Option<f64> {
    (ms > 0).then(|| value * unit / ms as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AggregationConfig {
    pub min_role_minutes: f64,
    /// Smallest same-role qualified group (the player included) for which
    /// percentiles are reported.
    pub min_percentile_group: usize,
    pub min_team_matches: usize,
    pub smoothing_window_min: usize,
}

impl Default for AggregationConfig {
    fn default() -> Self {
        Self {
            min_role_minutes: 450.0,
            min_percentile_group: 5,
            min_team_matches: 3,
            smoothing_window_min: 5,
        }
    }
}

impl AggregationConfig {
    pub fn qualifies(&self, total_ms: i64) -> bool {
        total_ms as f64 >= self.min_role_minutes * 60_000.0
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlayerPartial {
    pub matches: BTreeSet<String>,
    pub teams: BTreeSet<TeamId>,
    pub time: PhaseTime,
    pub distance_in: f64,
    pub distance_out: f64,
    pub hi_distance_in: f64,
    pub hi_distance_out: f64,
    pub hi_runs_in: u64,
    pub hi_runs_out: u64,
    pub hi_runs_in_onball: u64,
    pub movement: [u64; 6],
    pub actions: [u64; 4],
    pub action_epv: [f64; 4],
    pub receptions: [u64; 4],
}

impl PlayerPartial {
    pub fn merge(&mut self, o: &PlayerPartial) {
        self.matches.extend(o.matches.iter().cloned());
        self.teams.extend(o.teams.iter().cloned());
        self.time.in_possession_ms += o.time.in_possession_ms;
        self.time.out_of_possession_ms += o.time.out_of_possession_ms;
        self.time.out_of_play_ms += o.time.out_of_play_ms;
        self.distance_in += o.distance_in;
        self.distance_out += o.distance_out;
        self.hi_distance_in += o.hi_distance_in;
        self.hi_distance_out += o.hi_distance_out;
        self.hi_runs_in += o.hi_runs_in;
        self.hi_runs_out += o.hi_runs_out;
        self.hi_runs_in_onball += o.hi_runs_in_onball;
        for i in 0..6 {
            self.movement[i] += o.movement[i];
        }
        for i in 0..4 {
            self.actions[i] += o.actions[i];
            self.action_epv[i] += o.action_epv[i];
            self.receptions[i] += o.receptions[i];
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TeamPartial {
    pub matches: BTreeSet<String>,
    pub time: PhaseTime,
    pub direct_play_ms: i64,
    pub high_press_ms: i64,
    pub distance_in: f64,
    pub distance_out: f64,
    pub hi_distance_in: f64,
    pub hi_distance_out: f64,
    pub xg_diff_sum: f64,
    pub xg_matches: u32,
}

impl TeamPartial {
    pub fn merge(&mut self, o: &TeamPartial) {
        self.matches.extend(o.matches.iter().cloned());
        self.time.in_possession_ms += o.time.in_possession_ms;
        self.time.out_of_possession_ms += o.time.out_of_possession_ms;
        self.time.out_of_play_ms += o.time.out_of_play_ms;
        self.direct_play_ms += o.direct_play_ms;
        self.high_press_ms += o.high_press_ms;
        self.distance_in += o.distance_in;
        self.distance_out += o.distance_out;
        self.hi_distance_in += o.hi_distance_in;
        self.hi_distance_out += o.hi_distance_out;
        self.xg_diff_sum += o.xg_diff_sum;
        self.xg_matches += o.xg_matches;
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SeasonPartial {
    pub players: BTreeMap<(PlayerId, Role), PlayerPartial>,
    pub teams: BTreeMap<TeamId, TeamPartial>,
    pub samples: Vec<RunValueSample>,
}

impl SeasonPartial {
    pub fn merge(mut self, o: SeasonPartial) -> SeasonPartial {
        for (k, p) in o.players {
            self.players.entry(k).or_default().merge(&p);
        }
        for (k, t) in o.teams {
            self.teams.entry(k).or_default().merge(&t);
        }
        self.samples.extend(o.samples);
        self
    }
}

/// Partial contribution of one match.
pub fn match_partial(a: &MatchArtifacts) -> SeasonPartial {
    let mut out = SeasonPartial::default();
    for row in &a.ledger.players {
        let Some(role) = row.role else { continue };
        let p = out.players.entry((row.player_id.clone(), role)).or_default();
        p.matches.insert(a.match_id.clone());
        p.teams.insert(row.team_id.clone());
        p.time.in_possession_ms += row.in_possession_ms;
        p.time.out_of_possession_ms += row.out_of_possession_ms;
        p.time.out_of_play_ms += row.out_of_play_ms;
        p.distance_in += row.distance_in_m;
        p.distance_out += row.distance_out_m;
        p.hi_distance_in += row.hi_distance_in_m;
        p.hi_distance_out += row.hi_distance_out_m;
    }
    for r in &a.runs {
        let (Some(role), true) = (r.role, r.run.is_hi) else { continue };
        let p = out.players.entry((r.run.player_id.clone(), role)).or_default();
        match r.phase {
            PhaseKind::InPossession => {
                p.hi_runs_in += 1;
                p.hi_runs_in_onball += u64::from(r.onball);
                if let Some(m) = r.movement {
                    p.movement[m as usize] += 1;
                }
            }
            PhaseKind::OutOfPossession => p.hi_runs_out += 1,
            PhaseKind::OutOfPlay => {}
        }
    }
    for act in &a.actions.actions {
        let (Some(role), Some(cat)) = (act.role, act.category) else { continue };
        let p = out.players.entry((act.player_id.clone(), role)).or_default();
        p.actions[cat.index()] += 1;
        if let Some(v) = act.epv_added {
            p.action_epv[cat.index()] += v;
        }
    }
    for rec in &a.actions.receptions {
        let Some(role) = rec.role else { continue };
        out.players.entry((rec.player_id.clone(), role)).or_default().receptions[rec.category.index()] += 1;
    }
    for t in &a.ledger.teams {
        let p = out.teams.entry(t.team_id.clone()).or_default();
        p.matches.insert(a.match_id.clone());
        p.time.in_possession_ms += t.in_possession_ms;
        p.time.out_of_possession_ms += t.out_of_possession_ms;
        p.time.out_of_play_ms += t.out_of_play_ms;
        p.direct_play_ms += t.direct_play_ms;
        p.high_press_ms += t.high_press_ms;
        p.distance_in += t.distance_in_m;
        p.distance_out += t.distance_out_m;
        p.hi_distance_in += t.hi_distance_in_m;
        p.hi_distance_out += t.hi_distance_out_m;
        if let (Some(f), Some(a)) = (t.xg, t.opponent_xg) {
            p.xg_diff_sum += f - a;
            p.xg_matches += 1;
        }
    }
    out.samples.extend(a.samples.iter().cloned());
    out
}

/// Partials built in parallel, merged sequentially in match-id order.
pub fn season_partial(artifacts: &[MatchArtifacts]) -> SeasonPartial {
    let mut order: Vec<&MatchArtifacts> = artifacts.iter().collect();
    order.sort_by(|a, b| a.match_id.cmp(&b.match_id));
    let parts: Vec<SeasonPartial> = order.par_iter().map(|a| match_partial(a)).collect();
    parts.into_iter().fold(SeasonPartial::default(), SeasonPartial::merge)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InPossessionProfile {
    pub hi_runs_per30: Option<f64>,
    pub hi_distance_per30: Option<f64>,
    pub distance_per30: Option<f64>,
    /// Keys are exactly the six movement types.
    pub movement_per30: BTreeMap<MovementType, Option<f64>>,
    /// Rank among same-role qualified players, midpoint convention.
    pub movement_percentile: BTreeMap<MovementType, Option<f64>>,
    /// HI runs overlapping an own on-ball action over all HI runs.
    pub onball_hi_share: Option<f64>,
    pub actions_per30: BTreeMap<SpeedCategory, Option<f64>>,
    pub action_share: BTreeMap<SpeedCategory, Option<f64>>,
    pub epv_added_per30: BTreeMap<SpeedCategory, Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutOfPossessionProfile {
    pub hi_runs_per30: Option<f64>,
    pub hi_distance_per30: Option<f64>,
    pub distance_per30: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerProfile {
    pub player_id: PlayerId,
    pub role: Role,
    pub teams: Vec<TeamId>,
    pub matches: usize,
    pub minutes_in_possession: f64,
    pub minutes_out_of_possession: f64,
    pub minutes_out_of_play: f64,
    pub minutes_total: f64,
    pub qualified: bool,
    pub hi_distance_per60: Option<f64>,
    pub in_possession: InPossessionProfile,
    pub out_of_possession: OutOfPossessionProfile,
    pub reception_count: u64,
    /// Speed category two seconds before each reception; sums to 1.
    pub reception_share: BTreeMap<SpeedCategory, Option<f64>>,
    pub influence_beta: Option<f64>,
    pub influence_std_error: Option<f64>,
    pub influence_samples: usize,
}

/// One (player, role) pair with its time, whether or not it qualifies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RosterRow {
    pub player_id: PlayerId,
    pub role: Role,
    pub teams: Vec<TeamId>,
    pub matches: usize,
    pub minutes_total: f64,
    pub qualified: bool,
}

fn share(count: u64, total: u64) -> Option<f64> {
    (total > 0).then(|| count as f64 / total as f64)
}

fn category_map(f: impl Fn(usize) -> Option<f64>) -> BTreeMap<SpeedCategory, Option<f64>> {
    SpeedCategory::ALL.into_iter().map(|c| (c, f(c.index()))).collect()
}

fn minutes(ms: i64) -> f64 {
    ms as f64 / 60_000.0
}

/// Profile of one (player, role) from its merged partial. Percentiles and
/// influence are filled in by [`build_season`].
pub fn player_profile(player: &PlayerId, role: Role, p: &PlayerPartial, cfg: &AggregationConfig) -> PlayerProfile {
    let t = &p.time;
    let in_ms = t.in_possession_ms;
    let total_actions: u64 = p.actions.iter().sum();
    let total_receptions: u64 = p.receptions.iter().sum();
    PlayerProfile {
        player_id: player.clone(),
        role,
        teams: p.teams.iter().cloned().collect(),
        matches: p.matches.len(),
        minutes_in_possession: minutes(in_ms),
        minutes_out_of_possession: minutes(t.out_of_possession_ms),
        minutes_out_of_play: minutes(t.out_of_play_ms),
        minutes_total: minutes(in_ms + t.out_of_possession_ms + t.out_of_play_ms),
        qualified: cfg.qualifies(in_ms + t.out_of_possession_ms + t.out_of_play_ms),
        hi_distance_per60: normalize(p.hi_distance_in + p.hi_distance_out, NormBase::Effective, t),
        in_possession: InPossessionProfile {
            hi_runs_per30: per30(p.hi_runs_in as f64, in_ms),
            hi_distance_per30: per30(p.hi_distance_in, in_ms),
            distance_per30: per30(p.distance_in, in_ms),
            movement_per30: MovementType::ALL
                .into_iter()
                .map(|m| (m, per30(p.movement[m as usize] as f64, in_ms)))
                .collect(),
            movement_percentile: MovementType::ALL.into_iter().map(|m| (m, None)).collect(),
            onball_hi_share: share(p.hi_runs_in_onball, p.hi_runs_in),
            actions_per30: category_map(|i| per30(p.actions[i] as f64, in_ms)),
            action_share: category_map(|i| share(p.actions[i], total_actions)),
            epv_added_per30: category_map(|i| per30(p.action_epv[i], in_ms)),
        },
        out_of_possession: OutOfPossessionProfile {
            hi_runs_per30: per30(p.hi_runs_out as f64, t.out_of_possession_ms),
            hi_distance_per30: per30(p.hi_distance_out, t.out_of_possession_ms),
            distance_per30: per30(p.distance_out, t.out_of_possession_ms),
        },
        reception_count: total_receptions,
        reception_share: category_map(|i| share(p.receptions[i], total_receptions)),
        influence_beta: None,
        influence_std_error: None,
        influence_samples: 0,
    }
}

/// Midpoint percentile of each value within its group: `100 (below + equal/2) / n`.
/// Absent values and groups smaller than `min_group` get `None`.
pub fn midpoint_percentiles(values: &[Option<f64>], min_group: usize) -> Vec<Option<f64>> {
    let present: Vec<f64> = values.iter().flatten().copied().collect();
    let n = present.len();
    values
        .iter()
        .map(|v| {
            let v = (*v)?;
            if n < min_group.max(1) {
                return None;
            }
            let below = present.iter().filter(|&&o| o < v).count() as f64;
            let equal = present.iter().filter(|&&o| o == v).count() as f64;
            Some(100.0 * (below + 0.5 * equal) / n as f64)
        })
        .collect()
}

/// Season-level results shared by the exports and the service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Season {
    pub roster: Vec<RosterRow>,
    /// Qualified profiles sorted by (player, role).
    pub profiles: Vec<PlayerProfile>,
    pub teams: Vec<TeamStyle>,
    pub influence: Option<RunInfluenceModel>,
    pub influence_error: Option<String>,
    pub minute_curve: Vec<MinuteCurvePoint>,
}

impl Season {
    pub fn profile(&self, player: &PlayerId, role: Role) -> Option<&PlayerProfile> {
        self.profiles
            .binary_search_by(|p| (&p.player_id, p.role).cmp(&(player, role)))
            .ok()
            .map(|i| &self.profiles[i])
    }

    pub fn team(&self, team: &TeamId) -> Option<&TeamStyle> {
        self.teams.iter().find(|t| &t.team_id == team)
    }

    pub fn roster_entry(&self, player: &PlayerId, role: Role) -> Option<&RosterRow> {
        self.roster.iter().find(|r| &r.player_id == player && r.role == role)
    }
}

pub fn build_season(artifacts: &[MatchArtifacts], cfg: &AggregationConfig, min_cell_samples: usize) -> Season {
    let partial = season_partial(artifacts);
    let mut all: Vec<PlayerProfile> =
        partial.players.iter().map(|((pl, r), p)| player_profile(pl, *r, p, cfg)).collect();
    let roster = all
        .iter()
        .map(|p| RosterRow {
            player_id: p.player_id.clone(),
            role: p.role,
            teams: p.teams.clone(),
            matches: p.matches,
            minutes_total: p.minutes_total,
            qualified: p.qualified,
        })
        .collect();
    all.retain(|p| p.qualified);
    let mut profiles = all;

    for role in Role::ALL {
        let idx: Vec<usize> = (0..profiles.len()).filter(|&i| profiles[i].role == role).collect();
        for m in MovementType::ALL {
            let vals: Vec<Option<f64>> = idx.iter().map(|&i| profiles[i].in_possession.movement_per30[&m]).collect();
            for (&i, pct) in idx.iter().zip(midpoint_percentiles(&vals, cfg.min_percentile_group)) {
                profiles[i].in_possession.movement_percentile.insert(m, pct);
            }
        }
    }

    let qualified: BTreeSet<(PlayerId, Role)> = profiles.iter().map(|p| (p.player_id.clone(), p.role)).collect();
    let (influence, influence_error) = match fit_influence(&partial.samples, min_cell_samples, Some(&qualified)) {
        Ok(m) => (Some(m), None),
        Err(e) => (None, Some(e.to_string())),
    };
    if let Some(model) = &influence {
        for p in &mut profiles {
            if let Some(c) = model.cell(&p.player_id, p.role) {
                p.influence_beta = Some(c.beta);
                p.influence_std_error = c.std_error;
                p.influence_samples = c.n_samples;
            }
        }
    }

    let teams = partial.teams.iter().map(|(id, t)| team_style(id, t, cfg)).collect();
    let minute_curve = minute_curves(artifacts.iter().flat_map(|a| a.ledger.minutes.iter()), cfg.smoothing_window_min);
    Season {
        roster,
        profiles,
        teams,
        influence,
        influence_error,
        minute_curve,
    }
}

/// Flattens a JSON object into `(column, value)` pairs, joining nested keys
/// with `_` and arrays with `;`. CSV exports and the service both go
/// through the same serialized structs, so names match one to one.
pub fn flatten_json(value: &serde_json::Value) -> Vec<(String, serde_json::Value)> {
    fn walk(prefix: &str, v: &serde_json::Value, out: &mut Vec<(String, serde_json::Value)>) {
        match v {
            serde_json::Value::Object(map) => {
                for (k, child) in map {
                    let name = if prefix.is_empty() { k.clone() } else { format!("{prefix}_{k}") };
                    walk(&name, child, out);
                }
            }
            serde_json::Value::Array(items) => {
                let joined = items
                    .iter()
                    .map(|i| match i {
                        serde_json::Value::String(s) => s.clone(),
                        other => other.to_string(),
                    })
                    .collect::<Vec<_>>()
                    .join(";");
                out.push((prefix.to_string(), serde_json::Value::String(joined)));
            }
            other => out.push((prefix.to_string(), other.clone())),
        }
    }
    let mut out = Vec::new();
    walk("", value, &mut out);
    out
}
