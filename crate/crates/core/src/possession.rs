//! Possession phases: a rule automaton over the event stream that tiles each
//! period into team possessions and out-of-play spans, then attack labels per
//! sub-window and a defensive block label per labeled segment.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{normalize_point, Direction, Event, EventKind, Frame, MatchMeta, Period, PlayerId, Point2, TeamId};
use crate::tactical::build_block;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PossessionError {
    #[error("event {index} at t={t_ms} ms is earlier than the previous event")]
    Unordered { index: usize, t_ms: i64 },
    #[error("event {index} references unknown team {team}")]
    UnknownTeam { index: usize, team: TeamId },
    #[error("frames are not sorted by period and time at index {index}")]
    UnsortedFrames { index: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PossessionConfig {
    /// An opponent keeping the ball this long takes possession.
    pub regain_window_ms: i64,
    /// Consecutive opponent on-ball events that take possession.
    pub flip_events: usize,
    pub set_piece_window_ms: i64,
    pub counter_window_ms: i64,
    pub counter_ball_advance_m: f64,
    pub long_pass_m: f64,
    pub direct_window_ms: i64,
    pub high_press_area_share: f64,
    pub high_press_min_defenders: usize,
    /// Share of segment frames with a computable block below which the
    /// defense label is Unknown.
    pub min_block_coverage: f64,
    /// Sampling step used to close the last frame of a period.
    pub frame_step_ms: i64,
}

impl Default for PossessionConfig {
    fn default() -> Self {
        Self {
            regain_window_ms: 3000,
            flip_events: 2,
            set_piece_window_ms: 10_000,
            counter_window_ms: 12_000,
            counter_ball_advance_m: 30.0,
            long_pass_m: 30.0,
            direct_window_ms: 10_000,
            high_press_area_share: 0.9,
            high_press_min_defenders: 3,
            min_block_coverage: 0.5,
            frame_step_ms: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndReason {
    BallOut,
    RefereeStop,
    Turnover,
    PeriodEnd,
    /// Out-of-play span ended by a restart.
    Restart,
    /// Possession continues under a different attack label.
    LabelChange,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackType {
    Organized,
    DirectPlay,
    CounterAttack,
    SetPiece,
}

impl AttackType {
    pub const ALL: [AttackType; 4] = [
        AttackType::Organized,
        AttackType::DirectPlay,
        AttackType::CounterAttack,
        AttackType::SetPiece,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AttackType::Organized => "organized",
            AttackType::DirectPlay => "direct_play",
            AttackType::CounterAttack => "counter_attack",
            AttackType::SetPiece => "set_piece",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DefenseType {
    LowBlock,
    MediumBlock,
    HighPressure,
    Unknown,
}

impl DefenseType {
    pub const KNOWN: [DefenseType; 3] = [DefenseType::HighPressure, DefenseType::MediumBlock, DefenseType::LowBlock];

    pub fn name(self) -> &'static str {
        match self {
            DefenseType::HighPressure => "high_pressure",
            DefenseType::MediumBlock => "medium_block",
            DefenseType::LowBlock => "low_block",
            DefenseType::Unknown => "unknown",
        }
    }
}

/// One piece of the match timeline. `team_id` is `None` while the ball is out
/// of play; attack and defense labels exist only for team segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PossessionSegment {
    pub possession_id: Option<u32>,
    pub team_id: Option<TeamId>,
    pub period: Period,
    pub t_start: i64,
    pub t_end: i64,
    pub end_reason: EndReason,
    pub attack_type: Option<AttackType>,
    pub defense_type: Option<DefenseType>,
    #[serde(default)]
    pub low_confidence: bool,
}

impl PossessionSegment {
    pub fn duration_ms(&self) -> i64 {
        self.t_end - self.t_start
    }

    pub fn is_out_of_play(&self) -> bool {
        self.team_id.is_none()
    }

    pub fn contains(&self, period: Period, t_ms: i64) -> bool {
        self.period == period && self.t_start <= t_ms && t_ms < self.t_end
    }
}

/// `[first frame, last frame + step)` per period, in period order.
pub fn period_spans(frames: &[Frame], step_ms: i64) -> Vec<(Period, i64, i64)> {
    let mut spans: Vec<(Period, i64, i64)> = Vec::new();
    for f in frames {
        match spans.last_mut() {
            Some((p, _, end)) if *p == f.period => *end = f.t_ms + step_ms,
            _ => spans.push((f.period, f.t_ms, f.t_ms + step_ms)),
        }
    }
    spans
}

/// Frames of `period` with `t0 <= t < t1` from frames sorted by period and time.
pub fn frames_between(frames: &[Frame], period: Period, t0: i64, t1: i64) -> &[Frame] {
    let lo = frames.partition_point(|f| (f.period, f.t_ms) < (period, t0));
    let hi = frames.partition_point(|f| (f.period, f.t_ms) < (period, t1));
    &frames[lo..hi.max(lo)]
}

/// Effective playing time: total duration of team segments.
pub fn effective_time_ms(segments: &[PossessionSegment]) -> i64 {
    segments.iter().filter(|s| !s.is_out_of_play()).map(|s| s.duration_ms()).sum()
}

struct Timeline {
    out: Vec<PossessionSegment>,
    period: Period,
    team: Option<TeamId>,
    start: i64,
}

impl Timeline {
    /// Ends the current piece at `t` and starts `next`. Zero-length pieces are
    /// dropped.
    fn switch(&mut self, t: i64, reason: EndReason, next: Option<TeamId>) {
        if t > self.start {
            self.out.push(PossessionSegment {
                possession_id: None,
                team_id: self.team.take(),
                period: self.period,
                t_start: self.start,
                t_end: t,
                end_reason: reason,
                attack_type: None,
                defense_type: None,
                low_confidence: false,
            });
            self.start = t;
        }
        self.team = next;
    }
}

struct Challenge {
    team: TeamId,
    first_t: i64,
    touches: usize,
}

/// Splits the match into possessions and out-of-play spans.
///
/// The period timeline comes from the frames; events are clamped into it.
/// Play is out until the first restart or on-ball event of a period. An
/// opponent takes over at its first touch once it has made
/// `flip_events` consecutive on-ball events or kept the ball for
/// `regain_window_ms`; otherwise the touch is an instant regain.
pub fn segment_possessions(
    events: &[Event],
    frames: &[Frame],
    meta: &MatchMeta,
    cfg: &PossessionConfig,
) -> Result<Vec<PossessionSegment>, PossessionError> {
    for (i, w) in frames.windows(2).enumerate() {
        if (w[1].period, w[1].t_ms) < (w[0].period, w[0].t_ms) {
            return Err(PossessionError::UnsortedFrames { index: i + 1 });
        }
    }
    for (i, e) in events.iter().enumerate() {
        if meta.team(&e.team_id).is_none() {
            return Err(PossessionError::UnknownTeam {
                index: i,
                team: e.team_id.clone(),
            });
        }
        if i > 0 && (e.period, e.t_ms) < (events[i - 1].period, events[i - 1].t_ms) {
            return Err(PossessionError::Unordered { index: i, t_ms: e.t_ms });
        }
    }

    let mut out = Vec::new();
    for (period, span_start, span_end) in period_spans(frames, cfg.frame_step_ms) {
        let mut tl = Timeline {
            out: std::mem::take(&mut out),
            period,
            team: None,
            start: span_start,
        };
        let mut challenge: Option<Challenge> = None;
        let lo = events.partition_point(|e| e.period < period);
        let hi = events.partition_point(|e| e.period <= period);
        for e in &events[lo..hi] {
            let t = e.t_ms.clamp(span_start, span_end - 1);
            if let Some(c) = challenge.take() {
                if t - c.first_t >= cfg.regain_window_ms {
                    tl.switch(c.first_t, EndReason::Turnover, Some(c.team));
                } else {
                    challenge = Some(c);
                }
            }
            let team = Some(e.team_id.clone());
            if e.kind.is_stoppage() {
                if tl.team.is_some() {
                    let reason = if e.kind == EventKind::BallOut {
                        EndReason::BallOut
                    } else {
                        EndReason::RefereeStop
                    };
                    tl.switch(t, reason, None);
                }
                challenge = None;
            } else if e.kind.is_restart() {
                if tl.team != team {
                    // A restart while play is running implies a missed stoppage.
                    let reason = if tl.team.is_none() {
                        EndReason::Restart
                    } else {
                        EndReason::RefereeStop
                    };
                    tl.switch(t, reason, team);
                }
                challenge = None;
            } else if e.kind.is_on_ball() {
                if tl.team.is_none() {
                    tl.switch(t, EndReason::Restart, team);
                    challenge = None;
                } else if tl.team == team {
                    challenge = None;
                } else {
                    let c = match challenge.take() {
                        Some(mut c) if c.team == e.team_id => {
                            c.touches += 1;
                            c
                        }
                        _ => Challenge {
                            team: e.team_id.clone(),
                            first_t: t,
                            touches: 1,
                        },
                    };
                    if c.touches >= cfg.flip_events {
                        tl.switch(c.first_t, EndReason::Turnover, Some(c.team));
                    } else {
                        challenge = Some(c);
                    }
                }
            }
        }
        if let Some(c) = challenge.take() {
            if span_end - c.first_t >= cfg.regain_window_ms {
                tl.switch(c.first_t, EndReason::Turnover, Some(c.team));
            }
        }
        tl.switch(span_end, EndReason::PeriodEnd, None);
        out = tl.out;
    }

    let mut next_id = 0;
    for s in out.iter_mut().filter(|s| s.team_id.is_some()) {
        s.possession_id = Some(next_id);
        next_id += 1;
    }
    Ok(out)
}

fn team_direction(frames: &[Frame], meta: &MatchMeta, period: Period, team: &TeamId) -> Direction {
    frames
        .first()
        .and_then(|f| f.attacking_direction.get(team).copied())
        .or_else(|| meta.directions(period).get(team).copied())
        .unwrap_or(Direction::PositiveX)
}

/// Attack label intervals `(t_start, t_end, label, low_confidence)` covering
/// a team segment, in time order, with adjacent equal labels merged.
pub fn classify_attack(
    segment: &PossessionSegment,
    events: &[Event],
    frames: &[Frame],
    meta: &MatchMeta,
    cfg: &PossessionConfig,
) -> Vec<(i64, i64, AttackType, bool)> {
    let Some(team) = segment.team_id.as_ref() else {
        return Vec::new();
    };
    let pitch = &meta.pitch;
    let (half, third) = (pitch.length / 2.0, pitch.length / 3.0);
    let seg_frames = frames_between(frames, segment.period, segment.t_start, segment.t_end);
    let dir = team_direction(seg_frames, meta, segment.period, team);
    let norm = |p: Point2| normalize_point(p, dir, pitch);
    let opponent = meta.opponent(team).cloned();
    let goalkeepers = meta.goalkeepers();

    let lo = events.partition_point(|e| (e.period, e.t_ms) < (segment.period, segment.t_start));
    let hi = events.partition_point(|e| (e.period, e.t_ms) < (segment.period, segment.t_end));
    let mut windows: Vec<(i64, i64, AttackType, bool)> = Vec::new();
    for (i, e) in events.iter().enumerate().take(hi).skip(lo) {
        if &e.team_id != team {
            continue;
        }
        let at = norm(e.location);
        if e.kind.is_set_piece() && at.x > half {
            windows.push((e.t_ms, e.t_ms + cfg.set_piece_window_ms, AttackType::SetPiece, false));
        } else if e.kind == EventKind::Recovery && at.x < half {
            let end = (e.t_ms + cfg.counter_window_ms).min(segment.t_end);
            let w_frames = frames_between(frames, segment.period, e.t_ms, end);
            let w_events = &events[i..events.partition_point(|x| (x.period, x.t_ms) < (segment.period, end))];
            if let Some(low) = counter_qualifies(at, w_frames, w_events, team, opponent.as_ref(), &goalkeepers, &norm, half, cfg)
            {
                windows.push((e.t_ms, e.t_ms + cfg.counter_window_ms, AttackType::CounterAttack, low));
            }
        } else if e.kind == EventKind::Pass && at.x < third {
            let completed = events[i + 1..]
                .iter()
                .find(|x| x.kind.is_on_ball() || x.kind.is_stoppage())
                .is_some_and(|x| x.kind.is_on_ball() && &x.team_id == team);
            if let Some(end) = e.end_location {
                if completed && norm(end).x - at.x >= cfg.long_pass_m {
                    windows.push((e.t_ms, e.t_ms + cfg.direct_window_ms, AttackType::DirectPlay, false));
                }
            }
        }
    }

    let mut cuts: Vec<i64> = vec![segment.t_start, segment.t_end];
    for &(a, b, _, _) in &windows {
        cuts.extend([a, b].into_iter().filter(|&t| t > segment.t_start && t < segment.t_end));
    }
    cuts.sort_unstable();
    cuts.dedup();
    let mut labels: Vec<(i64, i64, AttackType, bool)> = Vec::new();
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (label, low) = windows
            .iter()
            .filter(|&&(s, e, _, _)| s <= a && b <= e)
            .map(|&(_, _, l, low)| (l, low))
            .max_by_key(|&(l, low)| (l, !low))
            .unwrap_or((AttackType::Organized, false));
        match labels.last_mut() {
            Some(last) if last.2 == label && last.3 == low => last.1 = b,
            _ => labels.push((a, b, label, low)),
        }
    }
    labels
}

fn block_centroid(frame: &Frame, team: &TeamId, goalkeepers: &BTreeSet<PlayerId>, norm: &impl Fn(Point2) -> Point2) -> Option<Point2> {
    let pts: Vec<Point2> = frame
        .team_players(team)
        .filter(|p| !goalkeepers.contains(&p.player_id))
        .map(|p| norm(p.xy))
        .collect();
    build_block(&pts).ok().map(|b| b.centroid())
}

/// `Some(low_confidence)` if the counter-attack rule holds in the window.
#[allow(clippy::too_many_arguments)]
fn counter_qualifies(
    recovery_at: Point2,
    frames: &[Frame],
    events: &[Event],
    team: &TeamId,
    opponent: Option<&TeamId>,
    goalkeepers: &BTreeSet<PlayerId>,
    norm: &impl Fn(Point2) -> Point2,
    half: f64,
    cfg: &PossessionConfig,
) -> Option<bool> {
    let ball_reach = if frames.is_empty() {
        events
            .iter()
            .filter(|e| &e.team_id == team)
            .flat_map(|e| [Some(e.location), e.end_location])
            .flatten()
            .map(|p| norm(p).x)
            .fold(f64::NEG_INFINITY, f64::max)
    } else {
        frames.iter().map(|f| norm(f.ball).x).fold(f64::NEG_INFINITY, f64::max)
    };
    if ball_reach - recovery_at.x < cfg.counter_ball_advance_m {
        return None;
    }
    let crosses = |side: &TeamId| -> Option<bool> {
        let xs: Vec<f64> = frames
            .iter()
            .map(|f| block_centroid(f, side, goalkeepers, norm).map(|c| c.x))
            .collect::<Option<_>>()?;
        if xs.is_empty() {
            return None;
        }
        let mut seen_behind = false;
        for x in xs {
            if x < half {
                seen_behind = true;
            } else if seen_behind {
                return Some(true);
            }
        }
        Some(false)
    };
    match (crosses(team), opponent.and_then(crosses)) {
        (Some(a), Some(b)) => (a && b).then_some(false),
        _ => Some(true),
    }
}

/// Block label of one frame, with `defenders` already in the attacking
/// team's frame. `None` if the block is degenerate.
pub fn frame_defense(defenders: &[Point2], pitch_length: f64, cfg: &PossessionConfig) -> Option<DefenseType> {
    let block = build_block(defenders).ok()?;
    let half = pitch_length / 2.0;
    let in_third = defenders.iter().filter(|p| p.x < pitch_length / 3.0).count();
    let area = block.area();
    Some(
        if block.area_left_of(half) >= cfg.high_press_area_share * area && in_third >= cfg.high_press_min_defenders {
            DefenseType::HighPressure
        } else if block.min_x() >= half {
            DefenseType::LowBlock
        } else {
            DefenseType::MediumBlock
        },
    )
}

/// Majority block label over the segment's frames; ties go to MediumBlock.
pub fn classify_defense(segment: &PossessionSegment, frames: &[Frame], meta: &MatchMeta, cfg: &PossessionConfig) -> DefenseType {
    let Some(team) = segment.team_id.as_ref() else {
        return DefenseType::Unknown;
    };
    let Some(opponent) = meta.opponent(team) else {
        return DefenseType::Unknown;
    };
    let seg_frames = frames_between(frames, segment.period, segment.t_start, segment.t_end);
    if seg_frames.is_empty() {
        return DefenseType::Unknown;
    }
    let dir = team_direction(seg_frames, meta, segment.period, team);
    let goalkeepers = meta.goalkeepers();
    let mut counts = [0usize; 3];
    for f in seg_frames {
        let pts: Vec<Point2> = f
            .team_players(opponent)
            .filter(|p| !goalkeepers.contains(&p.player_id))
            .map(|p| normalize_point(p.xy, dir, &meta.pitch))
            .collect();
        if let Some(label) = frame_defense(&pts, meta.pitch.length, cfg) {
            counts[label as usize] += 1;
        }
    }
    let labeled: usize = counts.iter().sum();
    if (labeled as f64) < cfg.min_block_coverage * seg_frames.len() as f64 {
        return DefenseType::Unknown;
    }
    majority(counts)
}

fn majority(counts: [usize; 3]) -> DefenseType {
    let [low, medium, high] = counts;
    if high > medium && high > low {
        DefenseType::HighPressure
    } else if low > medium && low > high {
        DefenseType::LowBlock
    } else {
        DefenseType::MediumBlock
    }
}

/// Full possession pipeline: automaton, attack sub-windows and defense labels.
pub fn label_possessions(
    events: &[Event],
    frames: &[Frame],
    meta: &MatchMeta,
    cfg: &PossessionConfig,
) -> Result<Vec<PossessionSegment>, PossessionError> {
    let raw = segment_possessions(events, frames, meta, cfg)?;
    let mut out = Vec::with_capacity(raw.len());
    for seg in raw {
        if seg.is_out_of_play() {
            out.push(seg);
            continue;
        }
        let labels = classify_attack(&seg, events, frames, meta, cfg);
        let n = labels.len();
        for (k, (a, b, attack, low)) in labels.into_iter().enumerate() {
            let mut piece = PossessionSegment {
                t_start: a,
                t_end: b,
                end_reason: if k + 1 == n { seg.end_reason } else { EndReason::LabelChange },
                attack_type: Some(attack),
                low_confidence: low,
                ..seg.clone()
            };
            piece.defense_type = Some(classify_defense(&piece, frames, meta, cfg));
            out.push(piece);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{PitchSpec, PlayerPosition, RosterEntry, TeamMeta};

    fn meta() -> MatchMeta {
        let team = |id: &str, dir| TeamMeta {
            id: id.into(),
            name: String::new(),
            players: (0..11)
                .map(|i| RosterEntry {
                    id: PlayerId::new(format!("{id}{i}")),
                    name: String::new(),
                    goalkeeper: i == 0,
                })
                .collect(),
            kickoff_direction: dir,
            xg: None,
        };
        MatchMeta {
            match_id: "m".into(),
            pitch: PitchSpec::default(),
            home: team("a", Direction::PositiveX),
            away: team("b", Direction::NegativeX),
        }
    }

    /// Empty frames every 100 ms over `[0, end_ms)`.
    fn bare_frames(end_ms: i64) -> Vec<Frame> {
        let m = meta();
        (0..end_ms / 100)
            .map(|k| Frame {
                t_ms: k * 100,
                period: Period::First,
                ball: Point2::new(52.5, 34.0),
                in_play: None,
                players: Vec::new(),
                attacking_direction: m.directions(Period::First),
            })
            .collect()
    }

    fn ev(t_ms: i64, kind: EventKind, team: &str) -> Event {
        Event {
            t_ms,
            period: Period::First,
            kind,
            team_id: team.into(),
            player_id: PlayerId::new(format!("{team}5")),
            location: Point2::new(52.5, 34.0),
            end_location: None,
        }
    }

    fn owners(segs: &[PossessionSegment]) -> Vec<(Option<&str>, i64, i64)> {
        segs.iter().map(|s| (s.team_id.as_ref().map(|t| t.as_str()), s.t_start, s.t_end)).collect()
    }

    fn run(events: &[Event], end_ms: i64) -> Vec<PossessionSegment> {
        segment_possessions(events, &bare_frames(end_ms), &meta(), &PossessionConfig::default()).unwrap()
    }

    #[test]
    fn instant_regain_keeps_possession() {
        use EventKind::*;
        let events = [
            ev(0, Kickoff, "a"),
            ev(1000, Pass, "a"),
            ev(2000, Reception, "a"),
            ev(3000, Recovery, "b"),
            ev(4500, Recovery, "a"),
            ev(6000, Pass, "a"),
        ];
        assert_eq!(owners(&run(&events, 10_000)), vec![(Some("a"), 0, 10_000)]);
    }

    #[test]
    fn two_opponent_events_flip_at_first_touch() {
        use EventKind::*;
        let events = [
            ev(0, Kickoff, "a"),
            ev(1000, Pass, "a"),
            ev(2000, Recovery, "b"),
            ev(2500, Pass, "b"),
            ev(3000, Reception, "b"),
        ];
        let segs = run(&events, 10_000);
        assert_eq!(owners(&segs), vec![(Some("a"), 0, 2000), (Some("b"), 2000, 10_000)]);
        assert_eq!(segs[0].end_reason, EndReason::Turnover);
        assert_eq!(segs[1].end_reason, EndReason::PeriodEnd);
    }

    #[test]
    fn long_single_touch_flips() {
        use EventKind::*;
        let events = [ev(0, Kickoff, "a"), ev(2000, Recovery, "b"), ev(5000, Pass, "a")];
        assert_eq!(
            owners(&run(&events, 10_000)),
            vec![(Some("a"), 0, 2000), (Some("b"), 2000, 5000), (Some("a"), 5000, 10_000)]
        );
    }

    #[test]
    fn ball_out_until_throw_in() {
        use EventKind::*;
        let events = [
            ev(0, Kickoff, "a"),
            ev(4000, BallOut, "a"),
            ev(9000, ThrowIn, "b"),
            ev(10_000, Foul, "a"),
            ev(12_000, FreeKick, "b"),
        ];
        let segs = run(&events, 20_000);
        assert_eq!(
            owners(&segs),
            vec![
                (Some("a"), 0, 4000),
                (None, 4000, 9000),
                (Some("b"), 9000, 10_000),
                (None, 10_000, 12_000),
                (Some("b"), 12_000, 20_000)
            ]
        );
        let reasons: Vec<_> = segs.iter().map(|s| s.end_reason).collect();
        assert_eq!(
            reasons,
            vec![
                EndReason::BallOut,
                EndReason::Restart,
                EndReason::RefereeStop,
                EndReason::Restart,
                EndReason::PeriodEnd
            ]
        );
        assert_eq!(effective_time_ms(&segs), 4000 + 1000 + 8000);
        assert_eq!(segs.iter().filter_map(|s| s.possession_id).collect::<Vec<_>>(), vec![0, 1, 2]);
    }

    #[test]
    fn leading_out_of_play_before_kickoff() {
        let events = [ev(1500, EventKind::Kickoff, "b")];
        let segs = run(&events, 5000);
        assert_eq!(owners(&segs), vec![(None, 0, 1500), (Some("b"), 1500, 5000)]);
    }

    #[test]
    fn unordered_and_unknown_events_fail() {
        let f = bare_frames(5000);
        let cfg = PossessionConfig::default();
        let events = [ev(2000, EventKind::Pass, "a"), ev(1000, EventKind::Pass, "a")];
        assert_eq!(
            segment_possessions(&events, &f, &meta(), &cfg).unwrap_err(),
            PossessionError::Unordered { index: 1, t_ms: 1000 }
        );
        let events = [ev(2000, EventKind::Pass, "z")];
        assert!(matches!(
            segment_possessions(&events, &f, &meta(), &cfg),
            Err(PossessionError::UnknownTeam { index: 0, .. })
        ));
    }

    /// Expected owner timeline straight from the rule text: an opponent's
    /// touch takes over when the next event is theirs too or comes at least
    /// 3 s later (or play ends at least 3 s later).
    fn oracle(events: &[(bool, i64)], end: i64) -> Vec<(Option<&'static str>, i64, i64)> {
        let name = |b: bool| if b { "b" } else { "a" };
        let mut out = Vec::new();
        let (mut owner, mut start) = (false, 0);
        for (i, &(team, t)) in events.iter().enumerate() {
            if team == owner {
                continue;
            }
            let takes_over = match events.get(i + 1) {
                Some(&(next_team, next_t)) => next_team == team || next_t - t >= 3000,
                None => end - t >= 3000,
            };
            if takes_over {
                if t > start {
                    out.push((Some(name(owner)), start, t));
                }
                owner = team;
                start = t;
            }
        }
        out.push((Some(name(owner)), start, end));
        out
    }

    #[test]
    fn automaton_matches_replay_oracle_exhaustively() {
        let gaps = [500, 2999, 3000, 4000];
        let tails = [1000, 3000];
        let mut checked = 0;
        for len in 0..=6u32 {
            let choices = (2 * gaps.len()).pow(len);
            for code in 0..choices {
                let mut c = code;
                let mut seq = Vec::new();
                let mut t = 0;
                for _ in 0..len {
                    let pick = c % (2 * gaps.len());
                    c /= 2 * gaps.len();
                    t += gaps[pick / 2];
                    seq.push((pick % 2 == 1, t));
                }
                for tail in tails {
                    let end = t + tail;
                    let mut events = vec![ev(0, EventKind::Kickoff, "a")];
                    events.extend(seq.iter().map(|&(b, t)| ev(t, EventKind::Pass, if b { "b" } else { "a" })));
                    // The timeline only needs the first and last frame.
                    let all = bare_frames(100);
                    let frames = vec![all[0].clone(), Frame { t_ms: end - 100, ..all[0].clone() }];
                    let segs = segment_possessions(&events, &frames, &meta(), &PossessionConfig::default()).unwrap();
                    assert_eq!(owners(&segs), oracle(&seq, end), "sequence {seq:?} end {end}");
                    assert_eq!(segs.iter().map(|s| s.duration_ms()).sum::<i64>(), end);
                    checked += 1;
                }
            }
        }
        assert_eq!(checked, 2 * (8usize.pow(7) - 1) / 7);
    }

    fn players_frame(t_ms: i64, ball: Point2, a: &[Point2], b: &[Point2]) -> Frame {
        let m = meta();
        let mut players = Vec::new();
        for (team, pts) in [("a", a), ("b", b)] {
            for (i, &xy) in pts.iter().enumerate() {
                players.push(PlayerPosition {
                    player_id: PlayerId::new(format!("{team}{}", i + 1)),
                    team_id: team.into(),
                    xy,
                });
            }
        }
        Frame {
            t_ms,
            period: Period::First,
            ball,
            in_play: Some(true),
            players,
            attacking_direction: m.directions(Period::First),
        }
    }

    fn blob(cx: f64, cy: f64) -> Vec<Point2> {
        (0..10)
            .map(|i| {
                let a = i as f64 * std::f64::consts::TAU / 10.0;
                Point2::new(cx + 8.0 * a.cos(), cy + 12.0 * a.sin())
            })
            .collect()
    }

    fn segment(team: &str, t0: i64, t1: i64) -> PossessionSegment {
        PossessionSegment {
            possession_id: Some(0),
            team_id: Some(team.into()),
            period: Period::First,
            t_start: t0,
            t_end: t1,
            end_reason: EndReason::PeriodEnd,
            attack_type: None,
            defense_type: None,
            low_confidence: false,
        }
    }

    #[test]
    fn corner_in_opponent_half_is_set_piece() {
        let mut corner = ev(0, EventKind::Corner, "a");
        corner.location = Point2::new(105.0, 0.0);
        let labels = classify_attack(&segment("a", 0, 20_000), &[corner], &bare_frames(20_000), &meta(), &PossessionConfig::default());
        assert_eq!(labels, vec![(0, 10_000, AttackType::SetPiece, false), (10_000, 20_000, AttackType::Organized, false)]);
    }

    #[test]
    fn slow_build_up_is_organized() {
        let events = [ev(0, EventKind::Pass, "a"), ev(3000, EventKind::Reception, "a")];
        let labels = classify_attack(&segment("a", 0, 20_000), &events, &bare_frames(20_000), &meta(), &PossessionConfig::default());
        assert_eq!(labels, vec![(0, 20_000, AttackType::Organized, false)]);
    }

    #[test]
    fn long_pass_from_the_back_is_direct_play() {
        let mut pass = ev(1000, EventKind::Pass, "a");
        pass.location = Point2::new(20.0, 34.0);
        pass.end_location = Some(Point2::new(55.0, 30.0));
        let mut rec = ev(3000, EventKind::Reception, "a");
        rec.location = Point2::new(55.0, 30.0);
        let cfg = PossessionConfig::default();
        let labels = classify_attack(&segment("a", 0, 20_000), &[pass.clone(), rec], &bare_frames(20_000), &meta(), &cfg);
        assert_eq!(labels[1], (1000, 11_000, AttackType::DirectPlay, false));
        // Intercepted: not completed.
        let lost = ev(3000, EventKind::Recovery, "b");
        let labels = classify_attack(&segment("a", 0, 20_000), &[pass, lost], &bare_frames(20_000), &meta(), &cfg);
        assert_eq!(labels, vec![(0, 20_000, AttackType::Organized, false)]);
    }

    #[test]
    fn counter_attack_after_recovery() {
        let mut rec = ev(0, EventKind::Recovery, "a");
        rec.location = Point2::new(20.0, 34.0);
        // Ball from x = 20 to x = 70 in 9 s; both blocks move from x ≈ 35 to x ≈ 65.
        let frames: Vec<Frame> = (0..200)
            .map(|k| {
                let s = (k as f64 / 90.0).min(1.0);
                let ball = Point2::new(20.0 + 50.0 * s, 34.0);
                let cx = 35.0 + 30.0 * s;
                players_frame(k * 100, ball, &blob(cx - 5.0, 34.0), &blob(cx + 5.0, 34.0))
            })
            .collect();
        let labels = classify_attack(&segment("a", 0, 20_000), &[rec.clone()], &frames, &meta(), &PossessionConfig::default());
        assert_eq!(labels[0], (0, 12_000, AttackType::CounterAttack, false));
        // Without player geometry the ball-only rule still applies, flagged.
        let ball_only: Vec<Frame> = frames.iter().map(|f| Frame { players: Vec::new(), ..f.clone() }).collect();
        let labels = classify_attack(&segment("a", 0, 20_000), &[rec], &ball_only, &meta(), &PossessionConfig::default());
        assert_eq!(labels[0], (0, 12_000, AttackType::CounterAttack, true));
    }

    #[test]
    fn set_piece_beats_direct_play() {
        let mut corner = ev(0, EventKind::Corner, "a");
        corner.location = Point2::new(105.0, 68.0);
        let mut pass = ev(5000, EventKind::Pass, "a");
        pass.location = Point2::new(10.0, 34.0);
        pass.end_location = Some(Point2::new(60.0, 34.0));
        let rec = ev(7000, EventKind::Reception, "a");
        let labels = classify_attack(
            &segment("a", 0, 30_000),
            &[corner, pass, rec],
            &bare_frames(30_000),
            &meta(),
            &PossessionConfig::default(),
        );
        assert_eq!(
            labels,
            vec![
                (0, 10_000, AttackType::SetPiece, false),
                (10_000, 15_000, AttackType::DirectPlay, false),
                (15_000, 30_000, AttackType::Organized, false)
            ]
        );
    }

    #[test]
    fn defense_examples() {
        let cfg = PossessionConfig::default();
        // Ten defenders camped across their own penalty area.
        let low: Vec<Point2> = (0..10).map(|i| Point2::new(90.0 + (i % 2) as f64 * 6.0, 16.0 + 4.0 * i as f64)).collect();
        assert_eq!(frame_defense(&low, 105.0, &cfg), Some(DefenseType::LowBlock));
        // Hull fully advanced, four defenders in the attackers' defensive third.
        let mut high: Vec<Point2> = (0..4).map(|i| Point2::new(25.0, 10.0 + 15.0 * i as f64)).collect();
        high.extend((0..6).map(|i| Point2::new(45.0, 8.0 + 10.0 * i as f64)));
        assert_eq!(frame_defense(&high, 105.0, &cfg), Some(DefenseType::HighPressure));
        // Straddling halfway.
        let mid: Vec<Point2> = blob(52.5, 34.0);
        assert_eq!(frame_defense(&mid, 105.0, &cfg), Some(DefenseType::MediumBlock));
        assert_eq!(frame_defense(&mid[..2], 105.0, &cfg), None);
    }

    #[test]
    fn segment_defense_majority_and_visibility() {
        let cfg = PossessionConfig::default();
        let m = meta();
        let low = blob(85.0, 34.0);
        let mid = blob(52.5, 34.0);
        let frames: Vec<Frame> = (0..10)
            .map(|k| players_frame(k * 100, Point2::new(50.0, 34.0), &[], if k < 5 { &low } else { &mid }))
            .collect();
        // 5 vs 5 tie goes to MediumBlock.
        assert_eq!(classify_defense(&segment("a", 0, 1000), &frames, &m, &cfg), DefenseType::MediumBlock);
        assert_eq!(classify_defense(&segment("a", 0, 400), &frames, &m, &cfg), DefenseType::LowBlock);
        let sparse: Vec<Frame> = (0..10)
            .map(|k| players_frame(k * 100, Point2::new(50.0, 34.0), &[], if k < 4 { &low } else { &low[..2] }))
            .collect();
        assert_eq!(classify_defense(&segment("a", 0, 1000), &sparse, &m, &cfg), DefenseType::Unknown);
    }

    #[test]
    fn defense_uses_attacking_team_orientation() {
        // Team b attacks towards -x in period 1, so a block at raw x ≈ 20 sits
        // deep in a's own half: a low block against b.
        let cfg = PossessionConfig::default();
        let frames: Vec<Frame> = (0..10)
            .map(|k| players_frame(k * 100, Point2::new(50.0, 34.0), &blob(20.0, 34.0), &[]))
            .collect();
        assert_eq!(classify_defense(&segment("b", 0, 1000), &frames, &meta(), &cfg), DefenseType::LowBlock);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn rank(d: DefenseType) -> u8 {
            match d {
                DefenseType::LowBlock => 0,
                DefenseType::MediumBlock => 1,
                DefenseType::HighPressure => 2,
                DefenseType::Unknown => unreachable!(),
            }
        }

        proptest! {
            #[test]
            fn pushing_the_block_up_never_lowers_the_label(
                pts in proptest::collection::vec((0.0f64..105.0, 0.0f64..68.0), 3..11),
            ) {
                let cfg = PossessionConfig::default();
                let pts: Vec<Point2> = pts.into_iter().map(|(x, y)| Point2::new(x, y)).collect();
                let pushed: Vec<Point2> = pts.iter().map(|p| Point2::new(p.x - 20.0, p.y)).collect();
                if let (Some(a), Some(b)) = (frame_defense(&pts, 105.0, &cfg), frame_defense(&pushed, 105.0, &cfg)) {
                    prop_assert!(rank(b) >= rank(a));
                }
            }
        }
    }
}
