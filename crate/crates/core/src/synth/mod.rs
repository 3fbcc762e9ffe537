//! Scripted synthetic matches with known ground truth.
//!
//! A [`Script`] describes periods, the two teams, who has the ball when, the
//! intended attack and defense style of each possession, and explicit runs.
//! [`generate`] turns it into 10 Hz tracking, events and a [`GroundTruth`]
//! derived from the script itself (analytic speed profiles, known team
//! shapes), never from the analysis pipeline.

mod motion;
mod oracle;
mod scenarios;

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use motion::Trapezoid;
pub use oracle::{expected_zone, gift_wrap, hull_side, three_lines, ExpectedZone};
pub use scenarios::{full_match, sprint_trace_script, FullMatchOptions, TeamSpec};

use crate::artifacts::{MinuteRow, PhaseKind};
use crate::formations::{raw_templates, simplify_role, Slot};
use crate::model::{
    Direction, Event, EventKind, Frame, MatchMeta, Period, PitchSpec, PlayerId, PlayerPosition, Point2, Role, RosterEntry,
    SpeedCategory, SpeedThresholds, TeamId, TeamMeta,
};
use crate::possession::{AttackType, DefenseType};
use crate::tactical::MovementType;

pub const STEP_MS: i64 = 100;
const TEAM_SIZE: usize = 11;
const KMH: f64 = 3.6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("invalid script: {0}")]
    Invalid(String),
    /// A possession whose attack style the simulated shapes cannot deliver.
    #[error("invalid script: {message}")]
    Infeasible { possession: usize, message: String },
    #[error("script JSON: {0}")]
    Json(String),
}

fn infeasible<T>(possession: usize, message: String) -> Result<T, SynthError> {
    Err(SynthError::Infeasible { possession, message })
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, SynthError> {
    Err(SynthError::Invalid(msg.into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Script {
    #[serde(default)]
    pub seed: u64,
    pub match_id: String,
    #[serde(default)]
    pub pitch: PitchSpec,
    #[serde(default)]
    pub periods: Vec<PeriodScript>,
    pub home: TeamScript,
    pub away: TeamScript,
    #[serde(default)]
    pub possessions: Vec<PossessionScript>,
    #[serde(default)]
    pub runs: Vec<RunDirective>,
    #[serde(default)]
    pub passes: Vec<ScriptedPass>,
    /// Players never picked as receivers of automatic passes.
    #[serde(default)]
    pub exclude_receivers: Vec<PlayerId>,
    #[serde(default)]
    pub motion: MotionConfig,
    /// Probability that a player is missing from a frame.
    #[serde(default)]
    pub dropout: f64,
    /// Standard deviation (m) of a fixed per-player offset from the slot.
    #[serde(default)]
    pub formation_noise_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeriodScript {
    pub period: Period,
    pub duration_ms: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TeamScript {
    pub id: TeamId,
    #[serde(default)]
    pub name: String,
    pub kickoff_direction: Direction,
    pub formation: String,
    /// Eleven players; the first one keeps goal, the others fill the
    /// formation slots in template order.
    pub players: Vec<PlayerId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xg: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PossessionEnd {
    /// The other team recovers the ball at `t_end`.
    Turnover,
    BallOut,
    Foul,
    PeriodEnd,
}

fn organized() -> AttackType {
    AttackType::Organized
}

fn medium() -> DefenseType {
    DefenseType::MediumBlock
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PossessionScript {
    pub team: TeamId,
    pub period: Period,
    pub t_start: i64,
    pub t_end: i64,
    #[serde(default = "organized")]
    pub attack: AttackType,
    /// Shape adopted by the defending team.
    #[serde(default = "medium")]
    pub defense: DefenseType,
    pub end: PossessionEnd,
}

/// A trapezoidal run: from rest to `cruise_kmh`, held for `hold_ms`, back to
/// rest. `heading` is in the player's attacking frame; components that would
/// take the player off the pitch are mirrored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunDirective {
    pub player: PlayerId,
    pub period: Period,
    pub t_start: i64,
    pub heading: Point2,
    pub cruise_kmh: f64,
    pub hold_ms: i64,
}

/// A pass received by `to` at `t_ms`, played `flight_ms` earlier by whoever
/// has the ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptedPass {
    pub period: Period,
    pub t_ms: i64,
    pub to: PlayerId,
    #[serde(default = "default_flight")]
    pub flight_ms: i64,
}

fn default_flight() -> i64 {
    800
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MotionConfig {
    pub accel_ms2: f64,
    /// Top speed (m/s) of the team shape moving between positions.
    pub shape_speed: f64,
    /// Speed (m/s) of a player walking back to the slot after a run.
    pub rejoin_speed: f64,
    pub pass_interval_ms: i64,
    pub flight_ms: i64,
    /// Mean depth (m from own goal line) of the outfield shape.
    pub depth_in_possession: f64,
    pub depth_low_block: f64,
    pub depth_medium_block: f64,
    pub depth_high_press: f64,
}

impl Default for MotionConfig {
    fn default() -> Self {
        Self {
            accel_ms2: 3.0,
            shape_speed: 1.2,
            rejoin_speed: 1.5,
            pass_interval_ms: 3000,
            flight_ms: 800,
            depth_in_possession: 60.0,
            depth_low_block: 30.0,
            depth_medium_block: 40.0,
            depth_high_press: 75.0,
        }
    }
}

impl MotionConfig {
    fn defense_depth(&self, d: DefenseType) -> f64 {
        match d {
            DefenseType::LowBlock => self.depth_low_block,
            DefenseType::HighPressure => self.depth_high_press,
            DefenseType::MediumBlock | DefenseType::Unknown => self.depth_medium_block,
        }
    }
}

impl Script {
    pub fn from_json(s: &str) -> Result<Self, SynthError> {
        serde_json::from_str(s).map_err(|e| SynthError::Json(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("script serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthSegment {
    pub period: Period,
    pub t_start: i64,
    pub t_end: i64,
    pub team_id: Option<TeamId>,
    pub attack_type: Option<AttackType>,
    /// Absent when the defending shape needs too long to settle.
    pub defense_type: Option<DefenseType>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRun {
    pub player_id: PlayerId,
    pub team_id: TeamId,
    pub period: Period,
    pub t_start: i64,
    pub t_valley_end: i64,
    pub t_peak_start: i64,
    pub t_peak_end: i64,
    pub t_next_valley_start: i64,
    pub peak_kmh: f64,
    pub is_hi: bool,
    pub phase: PhaseKind,
    /// Expected type for HI runs in possession when the opponent shape is
    /// unambiguous at both key moments.
    pub movement: Option<MovementType>,
    pub distance_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthReception {
    pub player_id: PlayerId,
    pub team_id: TeamId,
    pub period: Period,
    pub t_ms: i64,
    /// True speed at the lookback instant.
    pub speed_kmh: f64,
    /// Absent when the speed is near a category boundary or changing.
    pub category: Option<SpeedCategory>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub duration_ms: i64,
    pub formations: BTreeMap<TeamId, String>,
    pub roles: BTreeMap<PlayerId, Role>,
    pub segments: Vec<TruthSegment>,
    pub runs: Vec<TruthRun>,
    pub receptions: Vec<TruthReception>,
    /// Out-of-possession running per team and match minute, from the true
    /// positions and the scripted phases.
    pub minutes: Vec<MinuteRow>,
}

#[derive(Debug, Clone)]
pub struct SyntheticMatch {
    pub meta: MatchMeta,
    pub frames: Vec<Frame>,
    pub events: Vec<Event>,
    pub truth: GroundTruth,
}

/// Lookback (ms) used for reception truth.
pub const RECEPTION_LOOKBACK_MS: i64 = 2000;

struct TeamLayout {
    id: TeamId,
    formation: String,
    /// Slot offsets from the shape's mean, in meters, for players 1..11.
    offsets: Vec<Point2>,
    slots: Vec<Slot>,
}

#[derive(Debug, Clone)]
struct Plan {
    player: usize,
    period: Period,
    t0: i64,
    heading: Point2,
    profile: Trapezoid,
    end: i64,
}

impl Plan {
    fn active_at(&self, t: i64) -> bool {
        t >= self.t0 && t <= self.end
    }
}

struct PeriodSim {
    period: Period,
    duration_ms: i64,
    directions: [Direction; 2],
    /// `depth[team][k]`
    depth: [Vec<f64>; 2],
    /// `own[k][player]`, attacking frame of the player's team.
    own: Vec<Vec<Point2>>,
}

impl PeriodSim {
    fn pitch_pos(&self, pitch: &PitchSpec, player: usize, k: usize) -> Point2 {
        let p = self.own[k][player];
        match self.directions[player / TEAM_SIZE] {
            Direction::PositiveX => p,
            Direction::NegativeX => pitch.reflect(p),
        }
    }

    fn frames(&self) -> usize {
        self.own.len()
    }

    fn speed_kmh(&self, player: usize, k: usize) -> f64 {
        if k == 0 {
            return 0.0;
        }
        self.own[k][player].distance(self.own[k - 1][player]) / (STEP_MS as f64 / 1000.0) * KMH
    }
}

struct Ctx<'a> {
    script: &'a Script,
    teams: [TeamLayout; 2],
    players: Vec<PlayerId>,
    index: BTreeMap<PlayerId, usize>,
    thresholds: SpeedThresholds,
}

impl Ctx<'_> {
    fn team_of(&self, player: usize) -> usize {
        player / TEAM_SIZE
    }

    fn team_index(&self, id: &TeamId) -> Option<usize> {
        self.teams.iter().position(|t| &t.id == id)
    }

    /// Outfield player of `team` with the largest template depth.
    fn most_advanced(&self, team: usize) -> usize {
        let t = &self.teams[team];
        let j = (0..t.offsets.len())
            .max_by(|&a, &b| t.offsets[a].x.total_cmp(&t.offsets[b].x).then(b.cmp(&a)))
            .unwrap();
        team * TEAM_SIZE + 1 + j
    }
}

fn layout(team: &TeamScript) -> Result<TeamLayout, SynthError> {
    let Some((name, slots)) = raw_templates().into_iter().find(|(n, _)| n == &team.formation) else {
        let names: Vec<String> = raw_templates().into_iter().map(|(n, _)| n).collect();
        return invalid(format!("team {}: unknown formation {} (known: {})", team.id, team.formation, names.join(", ")));
    };
    let n = slots.len() as f64;
    let mx = slots.iter().map(|s| s.xy.x).sum::<f64>() / n;
    let offsets: Vec<Point2> = slots.iter().map(|s| Point2::new(s.xy.x - mx, s.xy.y)).collect();
    Ok(TeamLayout {
        id: team.id.clone(),
        formation: name,
        offsets,
        slots,
    })
}

fn on_grid(t: i64) -> bool {
    t % STEP_MS == 0
}

fn validate(script: &Script) -> Result<Ctx<'_>, SynthError> {
    let teams = [layout(&script.home)?, layout(&script.away)?];
    if script.home.id == script.away.id {
        return invalid("home and away teams share an id");
    }
    let mut players = Vec::new();
    let mut index = BTreeMap::new();
    for t in [&script.home, &script.away] {
        if t.players.len() != TEAM_SIZE {
            return invalid(format!("team {} has {} players, expected {TEAM_SIZE}", t.id, t.players.len()));
        }
        for p in &t.players {
            if index.insert(p.clone(), players.len()).is_some() {
                return invalid(format!("player {p} listed twice"));
            }
            players.push(p.clone());
        }
    }
    if !(0.0..1.0).contains(&script.dropout) {
        return invalid(format!("dropout {} outside [0, 1)", script.dropout));
    }
    if !(script.formation_noise_m >= 0.0 && script.formation_noise_m.is_finite()) {
        return invalid("formation_noise_m must be a non-negative number");
    }
    let m = &script.motion;
    if !(m.accel_ms2 > 0.0 && m.shape_speed > 0.0 && m.rejoin_speed > 0.0) {
        return invalid("motion speeds and acceleration must be positive");
    }
    if m.flight_ms < STEP_MS || m.pass_interval_ms < m.flight_ms + STEP_MS || !on_grid(m.flight_ms) || !on_grid(m.pass_interval_ms) {
        return invalid("pass_interval_ms must exceed flight_ms and both must be multiples of 100");
    }
    let mut seen = BTreeSet::new();
    let mut last_period = None;
    for p in &script.periods {
        if !seen.insert(p.period) || last_period.is_some_and(|l| l > p.period) {
            return invalid(format!("period {} repeated or out of order", p.period));
        }
        last_period = Some(p.period);
        if p.duration_ms <= 0 || !on_grid(p.duration_ms) {
            return invalid(format!("period {} duration must be a positive multiple of 100 ms", p.period));
        }
    }
    let duration = |period: Period| script.periods.iter().find(|p| p.period == period).map(|p| p.duration_ms);

    let thresholds = SpeedThresholds::default();
    let ctx = Ctx {
        script,
        teams,
        players,
        index,
        thresholds,
    };

    for (i, p) in script.possessions.iter().enumerate() {
        let what = format!("possession {i} ({} {}:{})", p.team, p.period, p.t_start);
        let Some(d) = duration(p.period) else {
            return invalid(format!("{what}: period not scripted"));
        };
        if ctx.team_index(&p.team).is_none() {
            return invalid(format!("{what}: unknown team"));
        }
        if !(on_grid(p.t_start) && on_grid(p.t_end)) {
            return invalid(format!("{what}: times must be multiples of 100 ms"));
        }
        if p.t_start < 0 || p.t_end > d || p.t_end - p.t_start < 2000 {
            return invalid(format!("{what}: must last at least 2 s inside the period"));
        }
        if p.defense == DefenseType::Unknown {
            return invalid(format!("{what}: defense must be low_block, medium_block or high_pressure"));
        }
        let next = script.possessions.get(i + 1).filter(|n| n.period == p.period);
        if let Some(n) = next {
            if n.t_start < p.t_end {
                return invalid(format!("{what}: overlaps the next possession"));
            }
        }
        if let Some(n) = script.possessions.get(i + 1) {
            if n.period < p.period {
                return invalid(format!("{what}: possessions out of period order"));
            }
        }
        match p.end {
            PossessionEnd::Turnover => match next {
                Some(n) if n.t_start == p.t_end && n.team != p.team => {}
                _ => return invalid(format!("{what}: a turnover needs the other team to start at t_end")),
            },
            PossessionEnd::BallOut | PossessionEnd::Foul => {
                let gap_end = next.map(|n| n.t_start).unwrap_or(d);
                if gap_end - p.t_end < 1000 {
                    return invalid(format!("{what}: a stoppage needs at least 1 s before the restart"));
                }
            }
            PossessionEnd::PeriodEnd => {
                if p.t_end != d {
                    return invalid(format!("{what}: period_end must end at the period end"));
                }
            }
        }
        let after_turnover = i > 0
            && script.possessions[i - 1].period == p.period
            && script.possessions[i - 1].end == PossessionEnd::Turnover;
        let kickoff = p.t_start == 0;
        match p.attack {
            AttackType::CounterAttack => {
                if !after_turnover {
                    return invalid(format!("{what}: a counter-attack must start from a turnover"));
                }
                if p.t_end - p.t_start < 12_000 {
                    return invalid(format!("{what}: a counter-attack needs at least 12 s"));
                }
                if p.defense == DefenseType::HighPressure {
                    return invalid(format!("{what}: the opponent must drop back during a counter-attack, not press high"));
                }
            }
            AttackType::DirectPlay | AttackType::SetPiece => {
                if after_turnover || kickoff {
                    return invalid(format!("{what}: {} must start from a restart after a stoppage", p.attack.name()));
                }
            }
            AttackType::Organized => {}
        }
    }

    let mut by_player: BTreeMap<usize, Vec<&RunDirective>> = BTreeMap::new();
    for r in &script.runs {
        let what = format!("run of {} at {}:{}", r.player, r.period, r.t_start);
        let Some(&pi) = ctx.index.get(&r.player) else {
            return invalid(format!("{what}: unknown player"));
        };
        let Some(d) = duration(r.period) else {
            return invalid(format!("{what}: period not scripted"));
        };
        if !on_grid(r.t_start) {
            return invalid(format!("{what}: start must be a multiple of 100 ms"));
        }
        if !(r.cruise_kmh > 0.0 && r.cruise_kmh < 40.0) {
            return invalid(format!("{what}: cruise speed must be in (0, 40) km/h"));
        }
        if thresholds.bounds().iter().any(|b| (r.cruise_kmh - b).abs() < 0.25) {
            return invalid(format!("{what}: cruise speed within 0.25 km/h of a category boundary"));
        }
        if make_plan(&ctx, pi, r).profile.distance(f64::INFINITY) > 50.0 {
            return invalid(format!("{what}: covers more than 50 m"));
        }
        if r.hold_ms < 600 {
            return invalid(format!("{what}: hold must be at least 600 ms"));
        }
        if !(r.heading.norm() > 0.0 && r.heading.norm().is_finite()) {
            return invalid(format!("{what}: heading must be a non-zero vector"));
        }
        let plan = make_plan(&ctx, pi, r);
        if r.t_start < 1000 || plan.end + 1000 > d {
            return invalid(format!("{what}: must start after 1 s and end 1 s before the period end"));
        }
        by_player.entry(pi).or_default().push(r);
    }
    for (pi, mut list) in by_player {
        list.sort_by_key(|r| (r.period, r.t_start));
        for w in list.windows(2) {
            let a = make_plan(&ctx, pi, w[0]);
            if w[1].period == a.period && w[1].t_start < a.end + 1500 {
                return invalid(format!(
                    "run of {} at {}:{}: starts less than 1.5 s after the previous run ends",
                    w[1].player, w[1].period, w[1].t_start
                ));
            }
        }
    }

    for p in &script.passes {
        let what = format!("pass to {} at {}:{}", p.to, p.period, p.t_ms);
        let Some(&pi) = ctx.index.get(&p.to) else {
            return invalid(format!("{what}: unknown player"));
        };
        if !(on_grid(p.t_ms) && on_grid(p.flight_ms)) || p.flight_ms < STEP_MS {
            return invalid(format!("{what}: times must be positive multiples of 100 ms"));
        }
        let team = &ctx.teams[ctx.team_of(pi)].id;
        let ok = script
            .possessions
            .iter()
            .any(|q| q.period == p.period && &q.team == team && p.t_ms - p.flight_ms >= q.t_start + 500 && p.t_ms <= q.t_end - 200);
        if !ok {
            return invalid(format!("{what}: not inside a possession of the receiver's team"));
        }
    }
    for p in &script.exclude_receivers {
        if !ctx.index.contains_key(p) {
            return invalid(format!("exclude_receivers: unknown player {p}"));
        }
    }
    Ok(ctx)
}

fn make_plan(ctx: &Ctx<'_>, player: usize, r: &RunDirective) -> Plan {
    let profile = Trapezoid {
        cruise: r.cruise_kmh / KMH,
        hold_s: r.hold_ms as f64 / 1000.0,
        accel: ctx.script.motion.accel_ms2,
    };
    let dur_ms = (profile.duration_s() * 1000.0 / STEP_MS as f64).ceil() as i64 * STEP_MS;
    let n = r.heading.norm();
    Plan {
        player,
        period: r.period,
        t0: r.t_start,
        heading: Point2::new(r.heading.x / n, r.heading.y / n),
        profile,
        end: r.t_start + dur_ms,
    }
}

/// Team owning the ball at `t` and the index of that possession.
fn owner_at<'p>(possessions: &[(usize, &'p PossessionScript)], t: i64) -> Option<(usize, &'p PossessionScript)> {
    possessions.iter().find(|(_, p)| p.t_start <= t && t < p.t_end).map(|&(i, p)| (i, p))
}

fn depth_target(ctx: &Ctx<'_>, team: usize, owner: Option<&PossessionScript>) -> Option<f64> {
    let m = &ctx.script.motion;
    owner.map(|p| {
        if p.team == ctx.teams[team].id {
            m.depth_in_possession
        } else {
            m.defense_depth(p.defense)
        }
    })
}

fn goalkeeper_x(depth: f64) -> f64 {
    (depth - 25.0).max(4.0)
}

fn simulate_period(
    ctx: &Ctx<'_>,
    period: &PeriodScript,
    possessions: &[(usize, &PossessionScript)],
    plans: &[Plan],
    noise: &[Point2],
) -> PeriodSim {
    let script = ctx.script;
    let pitch = &script.pitch;
    let m = &script.motion;
    let n_frames = (period.duration_ms / STEP_MS) as usize;
    let flip = period.period.flips_direction();
    let dir_of = |t: &TeamScript| if flip { t.kickoff_direction.flipped() } else { t.kickoff_direction };
    let directions = [dir_of(&script.home), dir_of(&script.away)];
    let n_players = ctx.players.len();
    let dt = STEP_MS as f64 / 1000.0;

    let first_owner = possessions.first().map(|(_, p)| *p);
    let mut target: [f64; 2] = [0, 1].map(|t| depth_target(ctx, t, first_owner).unwrap_or(m.depth_medium_block));
    let mut depth = target;
    let mut depth_series: [Vec<f64>; 2] = [Vec::with_capacity(n_frames), Vec::with_capacity(n_frames)];
    let mut own: Vec<Vec<Point2>> = Vec::with_capacity(n_frames);
    let mut headings: BTreeMap<usize, Point2> = BTreeMap::new();

    #[derive(Clone, Copy)]
    enum Mode {
        Formation,
        Run(usize, Point2),
        Rejoin,
    }
    let mut mode = vec![Mode::Formation; n_players];
    let mut starts: BTreeMap<(i64, usize), usize> = BTreeMap::new();
    for (i, p) in plans.iter().enumerate() {
        if p.period == period.period {
            starts.insert((p.t0, p.player), i);
        }
    }

    let slot = |player: usize, depth: &[f64; 2]| -> Point2 {
        let team = player / TEAM_SIZE;
        let j = player % TEAM_SIZE;
        let w = pitch.width / 2.0;
        if j == 0 {
            Point2::new(goalkeeper_x(depth[team]), w)
        } else {
            let o = ctx.teams[team].offsets[j - 1];
            Point2::new(depth[team] + o.x + noise[player].x, w + o.y + noise[player].y)
        }
    };

    for k in 0..n_frames {
        let t = k as i64 * STEP_MS;
        let owner = owner_at(possessions, t).map(|(_, p)| p);
        for team in 0..2 {
            if let Some(tg) = depth_target(ctx, team, owner) {
                target[team] = tg;
            }
            if k > 0 {
                let step = m.shape_speed * dt;
                depth[team] += (target[team] - depth[team]).clamp(-step, step);
            }
            depth_series[team].push(depth[team]);
        }
        let mut row = Vec::with_capacity(n_players);
        for pl in 0..n_players {
            let s = slot(pl, &depth);
            let prev = own.last().map(|r: &Vec<Point2>| r[pl]).unwrap_or(s);
            let pos = match mode[pl] {
                Mode::Formation => s,
                Mode::Rejoin => {
                    let d = prev.distance(s);
                    let step = m.rejoin_speed * dt;
                    if d <= step {
                        mode[pl] = Mode::Formation;
                        s
                    } else {
                        prev.lerp(s, step / d)
                    }
                }
                Mode::Run(i, p0) => {
                    let plan = &plans[i];
                    let u = headings[&i];
                    let tau = (t - plan.t0) as f64 / 1000.0;
                    let d = plan.profile.distance(tau);
                    if t >= plan.end {
                        mode[pl] = Mode::Rejoin;
                    }
                    Point2::new(p0.x + u.x * d, p0.y + u.y * d)
                }
            };
            if let Some(&i) = starts.get(&(t, pl)) {
                let plan = &plans[i];
                let total = plan.profile.distance(plan.profile.duration_s());
                let mut u = plan.heading;
                let end = Point2::new(pos.x + u.x * total, pos.y + u.y * total);
                if end.x < 2.0 || end.x > pitch.length - 2.0 {
                    u.x = -u.x;
                }
                if end.y < 2.0 || end.y > pitch.width - 2.0 {
                    u.y = -u.y;
                }
                let end = Point2::new(pos.x + u.x * total, pos.y + u.y * total);
                if !(2.0..=pitch.length - 2.0).contains(&end.x) || !(2.0..=pitch.width - 2.0).contains(&end.y) {
                    u = Point2::new((pitch.length / 2.0 - pos.x).signum(), 0.0);
                }
                headings.insert(i, u);
                mode[pl] = Mode::Run(i, pos);
            }
            row.push(pos);
        }
        own.push(row);
    }
    PeriodSim {
        period: period.period,
        duration_ms: period.duration_ms,
        directions,
        depth: depth_series,
        own,
    }
}

#[derive(Debug, Clone)]
struct BallLeg {
    t_from: i64,
    t_to: i64,
    from: BallAt,
    to: BallAt,
}

#[derive(Debug, Clone, Copy)]
enum BallAt {
    Player(usize),
    Fixed(Point2),
}

struct EventBuilder<'a, 'b> {
    ctx: &'a Ctx<'b>,
    sim: &'a PeriodSim,
    events: Vec<Event>,
    /// Ball holder timeline: at `t`, the ball follows the given leg.
    legs: Vec<BallLeg>,
}

impl EventBuilder<'_, '_> {
    fn pos(&self, player: usize, t: i64) -> Point2 {
        let k = ((t / STEP_MS) as usize).min(self.sim.frames() - 1);
        self.sim.pitch_pos(&self.ctx.script.pitch, player, k)
    }

    fn own_x(&self, player: usize, t: i64) -> f64 {
        let k = ((t / STEP_MS) as usize).min(self.sim.frames() - 1);
        self.sim.own[k][player].x
    }

    /// Outfield player nearest the shape's depth at `t`, preferring central ones.
    fn holder(&self, team: usize, t: i64, depth: f64) -> usize {
        let k = ((t / STEP_MS) as usize).min(self.sim.frames() - 1);
        let mid = self.ctx.script.pitch.width / 2.0;
        let key = |i: usize| {
            let p = self.sim.own[k][i];
            (p.x - depth).abs() + 0.1 * (p.y - mid).abs()
        };
        (team * TEAM_SIZE + 1..(team + 1) * TEAM_SIZE)
            .min_by(|&a, &b| key(a).total_cmp(&key(b)).then(a.cmp(&b)))
            .unwrap()
    }

    /// Area centroid depth of the outfield shape, in the team's own frame.
    fn shape_x(&self, team: usize, t: i64) -> f64 {
        let k = ((t / STEP_MS) as usize).min(self.sim.frames() - 1);
        let pts: Vec<Point2> = (team * TEAM_SIZE + 1..(team + 1) * TEAM_SIZE).map(|i| self.sim.own[k][i]).collect();
        oracle::hull_centroid(&pts).map_or(f64::NAN, |c| c.x)
    }

    /// Most advanced outfield player of a team at `t`.
    fn front(&self, team: usize, t: i64) -> usize {
        (team * TEAM_SIZE + 1..(team + 1) * TEAM_SIZE)
            .max_by(|&a, &b| self.own_x(a, t).total_cmp(&self.own_x(b, t)).then(b.cmp(&a)))
            .unwrap()
    }

    fn push(&mut self, t: i64, kind: EventKind, player: usize, end: Option<Point2>) {
        let team = self.ctx.team_of(player);
        self.events.push(Event {
            t_ms: t,
            period: self.sim.period,
            kind,
            team_id: self.ctx.teams[team].id.clone(),
            player_id: self.ctx.players[player].clone(),
            location: self.pos(player, t),
            end_location: end,
        });
    }

    fn hold(&mut self, player: usize, from: i64) {
        self.legs.push(BallLeg {
            t_from: from,
            t_to: i64::MAX,
            from: BallAt::Player(player),
            to: BallAt::Player(player),
        });
    }

    fn pass(&mut self, from: usize, to: usize, t: i64, r: i64) {
        let end = self.pos(to, r);
        self.push(t, EventKind::Pass, from, Some(end));
        self.push(r, EventKind::Reception, to, None);
        self.legs.push(BallLeg {
            t_from: t,
            t_to: r,
            from: BallAt::Fixed(self.pos(from, t)),
            to: BallAt::Fixed(end),
        });
        self.hold(to, r);
    }

    fn ball(&self, t: i64, last: Point2) -> Point2 {
        let i = self.legs.partition_point(|l| l.t_from <= t);
        let Some(leg) = i.checked_sub(1).map(|i| &self.legs[i]) else {
            return last;
        };
        let at = |b: BallAt| match b {
            BallAt::Player(p) => self.pos(p, t),
            BallAt::Fixed(p) => p,
        };
        if leg.t_to == i64::MAX || leg.t_to <= leg.t_from {
            at(leg.from)
        } else if t >= leg.t_to {
            at(leg.to)
        } else {
            let f = (t - leg.t_from) as f64 / (leg.t_to - leg.t_from) as f64;
            at(leg.from).lerp(at(leg.to), f)
        }
    }
}

/// Generates tracking, events and ground truth for `script`.
pub fn generate(script: &Script) -> Result<SyntheticMatch, SynthError> {
    let ctx = validate(script)?;
    let pitch = script.pitch;
    let m = &script.motion;
    let mut rng = ChaCha8Rng::seed_from_u64(script.seed);

    let mut noise = vec![Point2::default(); ctx.players.len()];
    if script.formation_noise_m > 0.0 {
        let normal = Normal::new(0.0, script.formation_noise_m).expect("finite sigma");
        for (i, n) in noise.iter_mut().enumerate() {
            if i % TEAM_SIZE != 0 {
                *n = Point2::new(normal.sample(&mut rng), normal.sample(&mut rng));
            }
        }
    }

    // Explicit runs, then the forward run that carries each counter-attack.
    let mut plans: Vec<Plan> = script.runs.iter().map(|r| make_plan(&ctx, ctx.index[&r.player], r)).collect();
    let mut counter_runs: BTreeMap<usize, usize> = BTreeMap::new();
    for (i, p) in script.possessions.iter().enumerate() {
        if p.attack != AttackType::CounterAttack {
            continue;
        }
        let team = ctx.team_index(&p.team).unwrap();
        let runner = ctx.most_advanced(team);
        let d = RunDirective {
            player: ctx.players[runner].clone(),
            period: p.period,
            t_start: p.t_start + 1000,
            heading: Point2::new(1.0, 0.0),
            cruise_kmh: 25.0,
            hold_ms: 2000,
        };
        let plan = make_plan(&ctx, runner, &d);
        if let Some(other) = plans.iter().find(|q| q.player == runner && q.period == plan.period && q.t0 <= plan.end + 1500 && plan.t0 <= q.end + 1500) {
            return invalid(format!(
                "possession {i}: the counter-attack run of {} clashes with the run at {}",
                ctx.players[runner], other.t0
            ));
        }
        counter_runs.insert(i, plans.len());
        plans.push(plan);
    }

    let mut frames = Vec::new();
    let mut events = Vec::new();
    let mut truth = GroundTruth {
        formations: ctx.teams.iter().map(|t| (t.id.clone(), t.formation.clone())).collect(),
        ..Default::default()
    };
    for (ti, t) in ctx.teams.iter().enumerate() {
        for j in 0..TEAM_SIZE {
            let role = if j == 0 {
                Role::Goalkeeper
            } else {
                let s = t.slots[j - 1];
                simplify_role(s.role, s.side)
            };
            truth.roles.insert(ctx.players[ti * TEAM_SIZE + j].clone(), role);
        }
    }
    let excluded: BTreeSet<usize> = script.exclude_receivers.iter().map(|p| ctx.index[p]).collect();
    let mut minute_offset = 0i64;
    let mut minutes: BTreeMap<(usize, u32), MinuteRow> = BTreeMap::new();

    for period in &script.periods {
        let possessions: Vec<(usize, &PossessionScript)> =
            script.possessions.iter().enumerate().filter(|(_, p)| p.period == period.period).collect();
        let sim = simulate_period(&ctx, period, &possessions, &plans, &noise);
        let mut eb = EventBuilder {
            ctx: &ctx,
            sim: &sim,
            events: Vec::new(),
            legs: Vec::new(),
        };

        for (pi, &(gi, p)) in possessions.iter().enumerate() {
            let team = ctx.team_index(&p.team).unwrap();
            let other = 1 - team;
            let (s, e) = (p.t_start, p.t_end);
            let prev = pi.checked_sub(1).map(|i| possessions[i].1);
            let after_turnover = prev.is_some_and(|q| q.end == PossessionEnd::Turnover);
            let depth_at = |tm: usize, t: i64| sim.depth[tm][((t / STEP_MS) as usize).min(sim.frames() - 1)];
            let mut scripted: Vec<(i64, i64, usize)> = script
                .passes
                .iter()
                .filter(|x| x.period == period.period && x.t_ms > s && x.t_ms <= e)
                .map(|x| (x.t_ms - x.flight_ms, x.t_ms, ctx.index[&x.to]))
                .collect();

            // Opening event and first holder.
            let mut carrier;
            let mut restricted_until = s;
            let mut restricted_x = f64::INFINITY;
            if after_turnover {
                carrier = eb.holder(team, s, depth_at(team, s));
                eb.push(s, EventKind::Recovery, carrier, None);
                eb.hold(carrier, s);
                if p.attack == AttackType::CounterAttack {
                    // Both shapes cross halfway, in the attacker's frame, within 11 s.
                    let half = pitch.length / 2.0;
                    let own = |tm: usize, t: i64| eb.shape_x(tm, t);
                    let opp = |t: i64| pitch.length - eb.shape_x(other, t);
                    let horizon = (s + 11_000).min(e);
                    let crosses = |f: &dyn Fn(i64) -> f64| {
                        f(s) <= half - 1.5 && (s..=horizon).step_by(STEP_MS as usize).any(|t| f(t) >= half + 1.5)
                    };
                    if !crosses(&|t| own(team, t)) || !crosses(&opp) {
                        return infeasible(gi, format!(
                            "possession {gi}: counter-attack at {}:{s} needs both shapes to cross halfway within 11 s (attacking shape at {:.1} m, opponent at {:.1} m)",
                            period.period,
                            own(team, s),
                            opp(s)
                        ));
                    }
                    let plan = &plans[counter_runs[&gi]];
                    scripted.push((s + 1500, plan.end, plan.player));
                } else if eb.own_x(carrier, s) < pitch.length / 2.0 {
                    restricted_until = s + 13_000;
                    restricted_x = eb.own_x(carrier, s) + 8.0;
                }
            } else {
                let (kind, taker) = if s == 0 && prev.is_none() {
                    (EventKind::Kickoff, ctx.most_advanced(team))
                } else {
                    match p.attack {
                        AttackType::SetPiece => (EventKind::FreeKick, eb.front(team, s)),
                        _ => (EventKind::GoalKick, team * TEAM_SIZE),
                    }
                };
                if p.attack == AttackType::SetPiece && eb.own_x(taker, s) <= pitch.length / 2.0 + 1.0 {
                    return infeasible(gi, format!(
                        "possession {gi}: set piece at {}:{s} is taken at {:.1} m, not in the opponent half",
                        period.period,
                        eb.own_x(taker, s)
                    ));
                }
                eb.push(s, kind, taker, None);
                eb.hold(taker, s);
                carrier = taker;
                if p.attack == AttackType::DirectPlay {
                    let r = s + 2000;
                    let target = eb.front(team, r);
                    let from = eb.own_x(carrier, s + 500);
                    if from >= pitch.length / 3.0 - 1.0 {
                        return infeasible(gi, format!(
                            "possession {gi}: direct play at {}:{s} starts at {from:.1} m, too far from goal",
                            period.period
                        ));
                    }
                    let length = eb.own_x(target, r) - from;
                    if length < 32.0 {
                        return infeasible(gi, format!(
                            "possession {gi}: direct play at {}:{s} only reaches {length:.1} m forward",
                            period.period
                        ));
                    }
                    scripted.push((s + 500, r, target));
                }
            }
            scripted.sort();

            // Passing sequence.
            let mut t = s + 500;
            let mut si = 0;
            let team_players: Vec<usize> = (team * TEAM_SIZE + 1..(team + 1) * TEAM_SIZE).collect();
            loop {
                let next_scripted = scripted.get(si).copied();
                let auto_fits = |t: i64| t + m.flight_ms <= e - 200 && next_scripted.is_none_or(|(ps, _, _)| t + m.flight_ms + 200 <= ps);
                if auto_fits(t) {
                    let r = t + m.flight_ms;
                    let cx = eb.own_x(carrier, t);
                    let busy = |q: usize| plans.iter().any(|pl| pl.player == q && pl.period == period.period && (pl.active_at(r) || pl.active_at(t)));
                    let mut cands: Vec<usize> = team_players
                        .iter()
                        .copied()
                        .filter(|&q| q != carrier && !excluded.contains(&q) && !busy(q))
                        .filter(|&q| eb.own_x(q, r) - cx <= 15.0)
                        .filter(|&q| r > restricted_until || eb.own_x(q, r) <= restricted_x)
                        .collect();
                    if cands.is_empty() {
                        cands = team_players.iter().copied().filter(|&q| q != carrier && !excluded.contains(&q)).collect();
                        cands.sort_by(|&a, &b| eb.own_x(a, r).total_cmp(&eb.own_x(b, r)));
                        cands.truncate(1);
                    }
                    if let Some(&to) = cands.choose(&mut rng) {
                        eb.pass(carrier, to, t, r);
                        carrier = to;
                    }
                    t += m.pass_interval_ms;
                } else if let Some((ps, r, to)) = next_scripted {
                    if ps < t - m.pass_interval_ms + m.flight_ms + 100 || ps < s + 500 {
                        return invalid(format!(
                            "pass to {} at {}:{r} is played before the previous ball arrives",
                            ctx.players[to], period.period
                        ));
                    }
                    if to == carrier {
                        return invalid(format!("pass to {} at {}:{r}: the receiver already has the ball", ctx.players[to], period.period));
                    }
                    eb.pass(carrier, to, ps, r);
                    carrier = to;
                    t = r + m.pass_interval_ms - m.flight_ms;
                    si += 1;
                } else {
                    break;
                }
            }

            match p.end {
                PossessionEnd::BallOut => {
                    eb.push(e, EventKind::BallOut, carrier, None);
                    let at = eb.pos(carrier, e);
                    eb.legs.push(BallLeg {
                        t_from: e,
                        t_to: i64::MAX,
                        from: BallAt::Fixed(at),
                        to: BallAt::Fixed(at),
                    });
                }
                PossessionEnd::Foul => {
                    let at = eb.pos(carrier, e);
                    let fouler = other * TEAM_SIZE + 1;
                    eb.events.push(Event {
                        t_ms: e,
                        period: period.period,
                        kind: EventKind::Foul,
                        team_id: ctx.teams[other].id.clone(),
                        player_id: ctx.players[fouler].clone(),
                        location: at,
                        end_location: None,
                    });
                    eb.legs.push(BallLeg {
                        t_from: e,
                        t_to: i64::MAX,
                        from: BallAt::Fixed(at),
                        to: BallAt::Fixed(at),
                    });
                }
                PossessionEnd::Turnover | PossessionEnd::PeriodEnd => {}
            }
        }
        eb.legs.sort_by_key(|l| l.t_from);

        // Frames.
        let dir_map = {
            let mut d = BTreeMap::new();
            d.insert(ctx.teams[0].id.clone(), sim.directions[0]);
            d.insert(ctx.teams[1].id.clone(), sim.directions[1]);
            std::sync::Arc::new(d)
        };
        let mut last_ball = Point2::new(pitch.length / 2.0, pitch.width / 2.0);
        for k in 0..sim.frames() {
            let t = k as i64 * STEP_MS;
            let ball = eb.ball(t, last_ball);
            last_ball = ball;
            let live = owner_at(&possessions, t).is_some();
            let mut players = Vec::with_capacity(ctx.players.len());
            for pl in 0..ctx.players.len() {
                if script.dropout > 0.0 && rng.random::<f64>() < script.dropout {
                    continue;
                }
                players.push(PlayerPosition {
                    player_id: ctx.players[pl].clone(),
                    team_id: ctx.teams[ctx.team_of(pl)].id.clone(),
                    xy: sim.pitch_pos(&pitch, pl, k),
                });
            }
            frames.push(Frame {
                t_ms: t,
                period: period.period,
                ball,
                in_play: Some(live),
                players,
                attacking_direction: dir_map.clone(),
            });
        }
        let mut period_events = eb.events;
        period_events.sort_by_key(|e| e.t_ms);
        events.extend(period_events);

        truth_segments(&ctx, &sim, &possessions, &mut truth.segments);
        truth_runs(&ctx, &sim, &possessions, &plans, &mut truth.runs);
        truth_receptions(&ctx, &sim, &events, &mut truth.receptions);
        truth_minutes(&ctx, &sim, &possessions, minute_offset, &mut minutes);
        minute_offset += sim.duration_ms;
        truth.duration_ms += sim.duration_ms;
    }
    truth.minutes = minutes.into_values().collect();

    let team_meta = |t: &TeamScript| TeamMeta {
        id: t.id.clone(),
        name: t.name.clone(),
        players: t
            .players
            .iter()
            .enumerate()
            .map(|(j, p)| RosterEntry {
                id: p.clone(),
                name: String::new(),
                goalkeeper: j == 0,
            })
            .collect(),
        kickoff_direction: t.kickoff_direction,
        xg: t.xg,
    };
    Ok(SyntheticMatch {
        meta: MatchMeta {
            match_id: script.match_id.clone(),
            pitch,
            home: team_meta(&script.home),
            away: team_meta(&script.away),
        },
        frames,
        events,
        truth,
    })
}

fn truth_segments(ctx: &Ctx<'_>, sim: &PeriodSim, possessions: &[(usize, &PossessionScript)], out: &mut Vec<TruthSegment>) {
    let m = &ctx.script.motion;
    let mut cursor = 0;
    let gap = |out: &mut Vec<TruthSegment>, a: i64, b: i64| {
        if b > a {
            out.push(TruthSegment {
                period: sim.period,
                t_start: a,
                t_end: b,
                team_id: None,
                attack_type: None,
                defense_type: None,
            });
        }
    };
    for &(_, p) in possessions {
        gap(out, cursor, p.t_start);
        let team = ctx.team_index(&p.team).unwrap();
        let other = 1 - team;
        let k = (p.t_start / STEP_MS) as usize;
        let start_depth = sim.depth[other][k.min(sim.frames() - 1)];
        let settle_ms = (start_depth - m.defense_depth(p.defense)).abs() / m.shape_speed * 1000.0;
        let defense = (settle_ms <= 0.3 * (p.t_end - p.t_start) as f64).then_some(p.defense);
        out.push(TruthSegment {
            period: sim.period,
            t_start: p.t_start,
            t_end: p.t_end,
            team_id: Some(p.team.clone()),
            attack_type: Some(p.attack),
            defense_type: defense,
        });
        cursor = p.t_end;
    }
    gap(out, cursor, sim.duration_ms);
}

fn phase_at(ctx: &Ctx<'_>, possessions: &[(usize, &PossessionScript)], team: usize, t: i64) -> PhaseKind {
    match owner_at(possessions, t) {
        None => PhaseKind::OutOfPlay,
        Some((_, p)) if p.team == ctx.teams[team].id => PhaseKind::InPossession,
        Some(_) => PhaseKind::OutOfPossession,
    }
}

fn round_to_step(t: f64) -> i64 {
    (t / STEP_MS as f64).round() as i64 * STEP_MS
}

fn truth_runs(ctx: &Ctx<'_>, sim: &PeriodSim, possessions: &[(usize, &PossessionScript)], plans: &[Plan], out: &mut Vec<TruthRun>) {
    let bounds = ctx.thresholds.bounds();
    let pitch = &ctx.script.pitch;
    for plan in plans {
        if plan.period != sim.period {
            continue;
        }
        let team = ctx.team_of(plan.player);
        let other = 1 - team;
        let prof = plan.profile;
        let cruise_kmh = prof.cruise * KMH;
        let walk = bounds[0];
        let top = bounds.iter().copied().filter(|b| *b <= cruise_kmh).fold(walk, f64::max);
        let at = |s: f64| plan.t0 + (s * 1000.0).round() as i64;
        let t_valley_end = at(prof.rise_time(walk / KMH));
        let t_peak_end = at(prof.fall_time(top / KMH));
        let phase = phase_at(ctx, possessions, team, t_valley_end);
        let is_hi = cruise_kmh >= ctx.thresholds.high_intensity();

        let mut movement = None;
        if is_hi && phase == PhaseKind::InPossession {
            // Stable over +-300 ms so small timing differences cannot flip it.
            let zone = |t: i64| -> Option<ExpectedZone> {
                let k0 = round_to_step(t as f64) / STEP_MS;
                let norm = |p: Point2| match sim.directions[team] {
                    Direction::PositiveX => p,
                    Direction::NegativeX => pitch.reflect(p),
                };
                let mut found = None;
                for k in k0 - 3..=k0 + 3 {
                    if k < 0 || k as usize >= sim.frames() {
                        return None;
                    }
                    let k = k as usize;
                    let pts: Vec<Point2> =
                        (other * TEAM_SIZE + 1..(other + 1) * TEAM_SIZE).map(|d| norm(sim.pitch_pos(pitch, d, k))).collect();
                    let z = expected_zone(&pts, norm(sim.pitch_pos(pitch, plan.player, k)), 1.0)?;
                    if found.is_some_and(|f| f != z) {
                        return None;
                    }
                    found = Some(z);
                }
                found
            };
            if let (Some(a), Some(b)) = (zone(t_valley_end), zone(t_peak_end)) {
                movement = oracle::expected_movement(a, b);
            }
        }
        out.push(TruthRun {
            player_id: ctx.players[plan.player].clone(),
            team_id: ctx.teams[team].id.clone(),
            period: sim.period,
            t_start: plan.t0,
            t_valley_end,
            t_peak_start: at(prof.rise_time(top / KMH)),
            t_peak_end,
            t_next_valley_start: at(prof.fall_time(walk / KMH)),
            peak_kmh: cruise_kmh,
            is_hi,
            phase,
            movement,
            distance_m: prof.distance(prof.duration_s()),
        });
    }
}

fn truth_receptions(ctx: &Ctx<'_>, sim: &PeriodSim, events: &[Event], out: &mut Vec<TruthReception>) {
    let bounds = ctx.thresholds.bounds();
    for e in events.iter().filter(|e| e.period == sim.period && e.kind == EventKind::Reception) {
        let t = e.t_ms - RECEPTION_LOOKBACK_MS;
        if t < 0 {
            continue;
        }
        let pl = ctx.index[&e.player_id];
        let k = (t / STEP_MS) as usize;
        let v = sim.speed_kmh(pl, k);
        let lo = k.saturating_sub(3).max(1);
        let hi = (k + 3).min(sim.frames() - 1);
        let cat = ctx.thresholds.categorize(v).ok();
        let stable = (lo..=hi).all(|j| {
            let s = sim.speed_kmh(pl, j);
            ctx.thresholds.categorize(s).ok() == cat && bounds.iter().all(|b| (s - b).abs() >= 0.2)
        });
        out.push(TruthReception {
            player_id: e.player_id.clone(),
            team_id: e.team_id.clone(),
            period: sim.period,
            t_ms: e.t_ms,
            speed_kmh: v,
            category: if stable { cat } else { None },
        });
    }
}

fn truth_minutes(
    ctx: &Ctx<'_>,
    sim: &PeriodSim,
    possessions: &[(usize, &PossessionScript)],
    offset: i64,
    out: &mut BTreeMap<(usize, u32), MinuteRow>,
) {
    let hi = ctx.thresholds.high_intensity();
    for k in 0..sim.frames() {
        let t = k as i64 * STEP_MS;
        let minute = ((offset + t) / 60_000) as u32;
        for team in 0..2 {
            let row = out.entry((team, minute)).or_insert_with(|| MinuteRow {
                team_id: ctx.teams[team].id.clone(),
                minute,
                out_of_possession_ms: 0,
                distance_m: 0.0,
                hi_distance_m: 0.0,
            });
            if phase_at(ctx, possessions, team, t) != PhaseKind::OutOfPossession {
                continue;
            }
            row.out_of_possession_ms += STEP_MS;
            if k == 0 {
                continue;
            }
            for pl in team * TEAM_SIZE..(team + 1) * TEAM_SIZE {
                let d = sim.own[k][pl].distance(sim.own[k - 1][pl]);
                row.distance_m += d;
                if sim.speed_kmh(pl, k) >= hi {
                    row.hi_distance_m += d;
                }
            }
        }
    }
}
