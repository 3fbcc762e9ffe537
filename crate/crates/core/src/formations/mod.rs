//! Formation detection by optimal assignment of mean relative positions to
//! templates, and per-second simplified roles.

mod hungarian;
mod templates;

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use hungarian::min_cost_assignment;
pub use templates::{default_templates, raw_templates};

use crate::model::{Direction, Event, EventKind, Frame, MatchMeta, Period, PlayerId, Point2, Role, TeamId};
use crate::possession::{frames_between, period_spans, PossessionSegment};

pub const OUTFIELD_SLOTS: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormationError {
    #[error("template {name} has {got} slots, expected 10")]
    WrongSlotCount { name: String, got: usize },
    #[error("expected 10 relative positions, got {got}")]
    WrongPointCount { got: usize },
    #[error("player {0} appears more than once")]
    DuplicatePlayer(PlayerId),
    #[error("all points coincide")]
    DegenerateShape,
    #[error("insufficient visibility: {phase_ms} ms of phase frames, {visible_players} players visible at least half the time")]
    InsufficientVisibility { phase_ms: i64, visible_players: usize },
    #[error("no templates configured")]
    NoTemplates,
    #[error("invalid template file: {0}")]
    Json(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlotRole {
    CentreBack,
    FullBack,
    WingBack,
    DefensiveMid,
    CentralMid,
    AttackingMid,
    WideMid,
    Winger,
    Striker,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    L,
    C,
    R,
}

/// Collapses a template slot to one of the seven analysis roles. Sides are
/// dropped.
pub fn simplify_role(role: SlotRole, _side: Side) -> Role {
    match role {
        SlotRole::CentreBack => Role::CentralDefender,
        SlotRole::FullBack | SlotRole::WingBack => Role::FullBack,
        SlotRole::DefensiveMid => Role::DefensiveMidfielder,
        SlotRole::CentralMid | SlotRole::AttackingMid => Role::Midfielder,
        SlotRole::WideMid | SlotRole::Winger => Role::Winger,
        SlotRole::Striker => Role::Striker,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Slot {
    pub xy: Point2,
    pub role: SlotRole,
    pub side: Side,
}

/// Ten outfield slots, centered with unit RMS radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTemplate")]
pub struct FormationTemplate {
    pub name: String,
    pub slots: Vec<Slot>,
}

#[derive(Deserialize)]
struct RawTemplate {
    name: String,
    slots: Vec<Slot>,
}

impl TryFrom<RawTemplate> for FormationTemplate {
    type Error = FormationError;

    fn try_from(raw: RawTemplate) -> Result<Self, Self::Error> {
        FormationTemplate::new(&raw.name, raw.slots)
    }
}

impl FormationTemplate {
    /// Builds a template from slot coordinates in any unit; they are
    /// normalized here.
    pub fn new(name: &str, mut slots: Vec<Slot>) -> Result<Self, FormationError> {
        if slots.len() != OUTFIELD_SLOTS {
            return Err(FormationError::WrongSlotCount {
                name: name.to_string(),
                got: slots.len(),
            });
        }
        let mut pts: Vec<Point2> = slots.iter().map(|s| s.xy).collect();
        normalize_shape(&mut pts)?;
        for (s, p) in slots.iter_mut().zip(pts) {
            s.xy = p;
        }
        Ok(Self {
            name: name.to_string(),
            slots,
        })
    }
}

/// Parses a JSON array of templates (`name`, `slots` with `xy`, `role`, `side`).
pub fn load_templates(json: &str) -> Result<Vec<FormationTemplate>, FormationError> {
    serde_json::from_str(json).map_err(|e| FormationError::Json(e.to_string()))
}

/// Centers the points on their mean and scales them to unit RMS radius.
/// Shapes that are already normalized are left bit-for-bit unchanged.
pub fn normalize_shape(points: &mut [Point2]) -> Result<(), FormationError> {
    let n = points.len() as f64;
    let mean = points.iter().fold(Point2::new(0.0, 0.0), |a, &p| a + p) * (1.0 / n);
    let rms = (points.iter().map(|&p| (p - mean).norm().powi(2)).sum::<f64>() / n).sqrt();
    if !(rms > 1e-12) {
        return Err(FormationError::DegenerateShape);
    }
    if mean.norm() < 1e-12 && (rms - 1.0).abs() < 1e-12 {
        return Ok(());
    }
    for p in points.iter_mut() {
        *p = (*p - mean) * (1.0 / rms);
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormationMatch {
    pub template: usize,
    pub name: String,
    /// Slot index per player, in input order.
    pub assignment: Vec<(PlayerId, usize)>,
    pub cost: f64,
}

fn squared_cost(points: &[(PlayerId, Point2)], template: &FormationTemplate) -> Vec<Vec<f64>> {
    points
        .iter()
        .map(|(_, p)| template.slots.iter().map(|s| (*p - s.xy).norm().powi(2)).collect())
        .collect()
}

/// Best template by minimum total squared distance over optimal matchings.
/// Ties go to the template listed first.
pub fn assign_formation(relpos: &[(PlayerId, Point2)], templates: &[FormationTemplate]) -> Result<FormationMatch, FormationError> {
    if relpos.len() != OUTFIELD_SLOTS {
        return Err(FormationError::WrongPointCount { got: relpos.len() });
    }
    let mut seen = BTreeSet::new();
    for (id, _) in relpos {
        if !seen.insert(id) {
            return Err(FormationError::DuplicatePlayer(id.clone()));
        }
    }
    let mut best: Option<FormationMatch> = None;
    for (k, t) in templates.iter().enumerate() {
        let (cols, cost) = min_cost_assignment(&squared_cost(relpos, t)).ok_or(FormationError::DegenerateShape)?;
        if best.as_ref().is_none_or(|b| cost < b.cost) {
            best = Some(FormationMatch {
                template: k,
                name: t.name.clone(),
                assignment: relpos.iter().map(|(id, _)| id.clone()).zip(cols).collect(),
                cost,
            });
        }
    }
    best.ok_or(FormationError::NoTemplates)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    InPossession,
    #[default]
    OutOfPossession,
    Any,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FormationConfig {
    pub window_ms: i64,
    pub stride_ms: i64,
    pub phase: Phase,
    pub min_phase_ms: i64,
    pub min_visibility: f64,
    pub min_player_visible_ms: i64,
    pub frame_step_ms: i64,
    pub templates: Vec<FormationTemplate>,
}

impl Default for FormationConfig {
    fn default() -> Self {
        Self {
            window_ms: 600_000,
            stride_ms: 60_000,
            phase: Phase::OutOfPossession,
            min_phase_ms: 60_000,
            min_visibility: 0.5,
            min_player_visible_ms: 60_000,
            frame_step_ms: 100,
            templates: default_templates(),
        }
    }
}

/// Mean position of each outfield player relative to the team centroid, in
/// the team's attacking frame, normalized like the templates.
///
/// `frames` are the phase frames of one window. The ten players visible most
/// often are kept; each must be visible in at least `min_visibility` of them.
pub fn mean_relative_positions(
    frames: &[&Frame],
    team: &TeamId,
    goalkeepers: &BTreeSet<PlayerId>,
    cfg: &FormationConfig,
) -> Result<Vec<(PlayerId, Point2)>, FormationError> {
    let mut sums: BTreeMap<&PlayerId, (Point2, usize)> = BTreeMap::new();
    for f in frames {
        let sign = match f.attacking_direction.get(team) {
            Some(Direction::NegativeX) => -1.0,
            _ => 1.0,
        };
        let outfield: Vec<_> = f.team_players(team).filter(|p| !goalkeepers.contains(&p.player_id)).collect();
        if outfield.is_empty() {
            continue;
        }
        let centroid = outfield.iter().fold(Point2::new(0.0, 0.0), |a, p| a + p.xy) * (1.0 / outfield.len() as f64);
        for p in outfield {
            let e = sums.entry(&p.player_id).or_insert((Point2::new(0.0, 0.0), 0));
            e.0 = e.0 + (p.xy - centroid) * sign;
            e.1 += 1;
        }
    }
    let phase_ms = frames.len() as i64 * cfg.frame_step_ms;
    let need = (cfg.min_visibility * frames.len() as f64).ceil() as usize;
    let mut visible: Vec<(&PlayerId, Point2, usize)> =
        sums.into_iter().filter(|(_, (_, c))| *c >= need.max(1)).map(|(id, (s, c))| (id, s, c)).collect();
    if phase_ms < cfg.min_phase_ms || visible.len() < OUTFIELD_SLOTS {
        return Err(FormationError::InsufficientVisibility {
            phase_ms,
            visible_players: visible.len(),
        });
    }
    visible.sort_by(|a, b| b.2.cmp(&a.2).then(a.0.cmp(b.0)));
    visible.truncate(OUTFIELD_SLOTS);
    visible.sort_by(|a, b| a.0.cmp(b.0));
    let mut pts: Vec<Point2> = visible.iter().map(|&(_, s, c)| s * (1.0 / c as f64)).collect();
    normalize_shape(&mut pts)?;
    Ok(visible.into_iter().map(|(id, _, _)| id.clone()).zip(pts).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoleInterval {
    pub period: Period,
    pub t_start: i64,
    pub t_end: i64,
    /// `None` when the role is unknown.
    pub role: Option<Role>,
    pub formation: Option<String>,
    pub side: Option<Side>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormationWindow {
    pub team_id: TeamId,
    pub period: Period,
    pub t_start: i64,
    pub t_end: i64,
    pub formation: String,
    pub cost: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RoleTimeline {
    pub players: BTreeMap<PlayerId, Vec<RoleInterval>>,
    pub windows: Vec<FormationWindow>,
}

impl RoleTimeline {
    pub fn interval_at(&self, player: &PlayerId, period: Period, t_ms: i64) -> Option<&RoleInterval> {
        let ivs = self.players.get(player)?;
        let i = ivs.partition_point(|iv| (iv.period, iv.t_end) <= (period, t_ms));
        ivs.get(i).filter(|iv| iv.period == period && iv.t_start <= t_ms)
    }

    pub fn role_at(&self, player: &PlayerId, period: Period, t_ms: i64) -> Option<Role> {
        self.interval_at(player, period, t_ms).and_then(|iv| iv.role)
    }

    /// Milliseconds spent in each known role.
    pub fn role_time_ms(&self, player: &PlayerId) -> BTreeMap<Role, i64> {
        let mut out = BTreeMap::new();
        for iv in self.players.get(player).into_iter().flatten() {
            if let Some(r) = iv.role {
                *out.entry(r).or_insert(0) += iv.t_end - iv.t_start;
            }
        }
        out
    }
}

/// Whether `team` is in the given phase at `(period, t_ms)`.
fn in_phase(segments: &[PossessionSegment], team: &TeamId, phase: Phase, period: Period, t_ms: i64) -> bool {
    let i = segments.partition_point(|s| (s.period, s.t_end) <= (period, t_ms));
    let Some(seg) = segments.get(i).filter(|s| s.contains(period, t_ms)) else {
        return false;
    };
    match (&seg.team_id, phase) {
        (None, _) => false,
        (Some(_), Phase::Any) => true,
        (Some(owner), Phase::InPossession) => owner == team,
        (Some(owner), Phase::OutOfPossession) => owner != team,
    }
}

struct WindowResult {
    epoch: usize,
    center: i64,
    roles: BTreeMap<PlayerId, (Role, Side)>,
    formation: String,
}

fn window_bounds(e0: i64, e1: i64, cfg: &FormationConfig) -> Vec<(i64, i64)> {
    let mut out = Vec::new();
    let mut s = e0;
    while s + cfg.window_ms <= e1 {
        out.push((s, s + cfg.window_ms));
        s += cfg.stride_ms;
    }
    if out.is_empty() && e1 > e0 {
        out.push((e0, e1));
    }
    out
}

/// Per-second roles for every player, from sliding formation windows.
///
/// Windows restart at every substitution of the team. Each second takes the
/// role from the valid window of the same substitution epoch whose center is
/// nearest (earlier on ties). Intervals tile each player's visible span in
/// every period.
pub fn build_role_timeline(
    frames: &[Frame],
    events: &[Event],
    segments: &[PossessionSegment],
    meta: &MatchMeta,
    cfg: &FormationConfig,
) -> RoleTimeline {
    let goalkeepers = meta.goalkeepers();
    let mut timeline = RoleTimeline::default();
    for (period, span_start, span_end) in period_spans(frames, cfg.frame_step_ms) {
        let pframes = frames_between(frames, period, span_start, span_end);
        for team_meta in meta.teams() {
            let team = &team_meta.id;
            let mut cuts: Vec<i64> = events
                .iter()
                .filter(|e| e.period == period && e.kind == EventKind::Substitution && &e.team_id == team)
                .map(|e| e.t_ms)
                .filter(|&t| t > span_start && t < span_end)
                .collect();
            cuts.sort_unstable();
            cuts.dedup();
            let mut epochs = vec![span_start];
            epochs.extend(cuts);
            epochs.push(span_end);

            let jobs: Vec<(usize, i64, i64)> = epochs
                .windows(2)
                .enumerate()
                .flat_map(|(k, w)| window_bounds(w[0], w[1], cfg).into_iter().map(move |(a, b)| (k, a, b)))
                .collect();
            let results: Vec<(usize, i64, i64, Option<(WindowResult, f64)>)> = jobs
                .par_iter()
                .map(|&(epoch, a, b)| {
                    let window: Vec<&Frame> = frames_between(pframes, period, a, b)
                        .iter()
                        .filter(|f| in_phase(segments, team, cfg.phase, period, f.t_ms))
                        .collect();
                    let res = mean_relative_positions(&window, team, &goalkeepers, cfg)
                        .and_then(|rel| assign_formation(&rel, &cfg.templates))
                        .ok()
                        .map(|m| {
                            let t = &cfg.templates[m.template];
                            let roles = m
                                .assignment
                                .iter()
                                .map(|(id, k)| {
                                    let slot = t.slots[*k];
                                    (id.clone(), (simplify_role(slot.role, slot.side), slot.side))
                                })
                                .collect();
                            (
                                WindowResult {
                                    epoch,
                                    center: (a + b) / 2,
                                    roles,
                                    formation: m.name,
                                },
                                m.cost,
                            )
                        });
                    (epoch, a, b, res)
                })
                .collect();
            let mut valid = Vec::new();
            for (_, a, b, res) in results {
                if let Some((w, cost)) = res {
                    timeline.windows.push(FormationWindow {
                        team_id: team.clone(),
                        period,
                        t_start: a,
                        t_end: b,
                        formation: w.formation.clone(),
                        cost,
                    });
                    valid.push(w);
                }
            }

            let mut seen: BTreeMap<&PlayerId, (i64, i64, usize)> = BTreeMap::new();
            for f in pframes {
                for p in f.team_players(team) {
                    let e = seen.entry(&p.player_id).or_insert((f.t_ms, f.t_ms, 0));
                    e.1 = f.t_ms;
                    e.2 += 1;
                }
            }
            for (player, (first, last, count)) in seen {
                let span = (first, last + cfg.frame_step_ms);
                let ivs = timeline.players.entry(player.clone()).or_default();
                let fixed = if goalkeepers.contains(player) {
                    Some(Some((Role::Goalkeeper, Side::C)))
                } else if (count as i64) * cfg.frame_step_ms < cfg.min_player_visible_ms {
                    Some(None)
                } else {
                    None
                };
                if let Some(value) = fixed {
                    ivs.push(RoleInterval {
                        period,
                        t_start: span.0,
                        t_end: span.1,
                        role: value.map(|v| v.0),
                        formation: None,
                        side: value.map(|v| v.1),
                    });
                    continue;
                }
                let mut t = span.0;
                while t < span.1 {
                    let e = (t + 1000).min(span.1);
                    let mid = (t + e) / 2;
                    let epoch = epochs.partition_point(|&c| c <= mid).saturating_sub(1);
                    let pick = valid
                        .iter()
                        .filter(|w| w.epoch == epoch && w.roles.contains_key(player))
                        .min_by_key(|w| ((w.center - mid).abs(), w.center));
                    let (role, side, formation) = match pick {
                        Some(w) => {
                            let (r, s) = w.roles[player];
                            (Some(r), Some(s), Some(w.formation.clone()))
                        }
                        None => (None, None, None),
                    };
                    match ivs.last_mut() {
                        Some(last)
                            if last.period == period
                                && last.t_end == t
                                && last.role == role
                                && last.side == side
                                && last.formation == formation =>
                        {
                            last.t_end = e
                        }
                        _ => ivs.push(RoleInterval {
                            period,
                            t_start: t,
                            t_end: e,
                            role,
                            formation,
                            side,
                        }),
                    }
                    t = e;
                }
            }
        }
    }
    for ivs in timeline.players.values_mut() {
        ivs.sort_by_key(|iv| (iv.period, iv.t_start));
    }
    timeline
}
