//! Per-match analysis: kinematics, possession, roles, tactical context,
//! valuation and the effective-time ledger.

use std::collections::BTreeMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::artifacts::{
    ActionsArtifact, MatchArtifacts, MatchLedger, MinuteRow, OnBallAction, PhaseKind, PlayerLedgerRow, ReceptionSample,
    RunRecord, TeamLedger,
};
use crate::config::EngineConfig;
use crate::formations::build_role_timeline;
use crate::kinematics::{compute_speed, segment_runs, split_track, KinematicsError, SpeedSignal, TimedPoint};
use crate::model::{Event, EventKind, Frame, MatchMeta, Period, PlayerId, Point2, Role, TeamId};
use crate::possession::{label_possessions, period_spans, AttackType, DefenseType, PossessionError, PossessionSegment};
use crate::tactical::{classify_run, nearest_frame, RunClass, RunContext};
use crate::valuation::{value_run, EpvProvider, FileEpv, RunValuationContext, SurrogateEpv};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("possession: {0}")]
    Possession(#[from] PossessionError),
    #[error("kinematics: {0}")]
    Kinematics(#[from] KinematicsError),
    #[error("frame {index}: player {player} is not on the roster of team {team}")]
    UnknownPlayer { index: usize, player: PlayerId, team: TeamId },
}

/// Everything needed to analyse one match.
#[derive(Debug, Clone)]
pub struct MatchBundle {
    pub meta: MatchMeta,
    /// Sorted by period and time.
    pub frames: Vec<Frame>,
    pub events: Vec<Event>,
    /// External possession values; the surrogate is used when absent.
    pub epv: Option<FileEpv>,
}

/// Smoothed speed signals of one player, sorted by period and time.
#[derive(Debug, Clone, Default)]
struct PlayerKinematics {
    team: Option<TeamId>,
    signals: Vec<(SpeedSignal, Vec<Point2>)>,
    /// Frame timestamps at which the player is visible, per period.
    presence: Vec<(Period, i64)>,
}

impl PlayerKinematics {
    fn signal_at(&self, period: Period, t_ms: i64, tol: i64) -> Option<&SpeedSignal> {
        self.signals
            .iter()
            .map(|(s, _)| s)
            .filter(|s| s.period == period)
            .find(|s| match (s.samples.first(), s.samples.last()) {
                (Some(a), Some(b)) => a.t_ms - tol <= t_ms && t_ms <= b.t_ms + tol,
                _ => false,
            })
    }

    fn speed_at(&self, period: Period, t_ms: i64, tol: i64) -> Option<f64> {
        self.signal_at(period, t_ms, tol)?.speed_at(t_ms, tol)
    }

    fn max_speed(&self, period: Period, t0: i64, t1: i64, tol: i64) -> Option<f64> {
        let s = self.signal_at(period, t0, tol)?;
        if t1 > t0 {
            s.max_speed_between(t0, t1).or_else(|| s.speed_at(t0, tol))
        } else {
            s.speed_at(t0, tol)
        }
    }
}

fn segment_at(segments: &[PossessionSegment], period: Period, t_ms: i64) -> Option<&PossessionSegment> {
    let i = segments.partition_point(|s| (s.period, s.t_end) <= (period, t_ms));
    segments.get(i).filter(|s| s.contains(period, t_ms))
}

fn phase_of(seg: Option<&PossessionSegment>, team: &TeamId) -> PhaseKind {
    match seg.and_then(|s| s.team_id.as_ref()) {
        None => PhaseKind::OutOfPlay,
        Some(t) if t == team => PhaseKind::InPossession,
        Some(_) => PhaseKind::OutOfPossession,
    }
}

fn period_frames(frames: &[Frame], period: Period) -> &[Frame] {
    let lo = frames.partition_point(|f| f.period < period);
    let hi = frames.partition_point(|f| f.period <= period);
    &frames[lo..hi]
}

fn kinematics(bundle: &MatchBundle, cfg: &EngineConfig) -> Result<BTreeMap<PlayerId, PlayerKinematics>, PipelineError> {
    let mut tracks: BTreeMap<PlayerId, (TeamId, BTreeMap<Period, Vec<TimedPoint>>)> = BTreeMap::new();
    for (index, f) in bundle.frames.iter().enumerate() {
        for p in &f.players {
            if bundle.meta.team_of(&p.player_id) != Some(&p.team_id) {
                return Err(PipelineError::UnknownPlayer {
                    index,
                    player: p.player_id.clone(),
                    team: p.team_id.clone(),
                });
            }
            let entry = tracks.entry(p.player_id.clone()).or_insert_with(|| (p.team_id.clone(), BTreeMap::new()));
            entry.1.entry(f.period).or_default().push(TimedPoint { t_ms: f.t_ms, xy: p.xy });
        }
    }
    let kin = &cfg.kinematics;
    let built: Result<Vec<(PlayerId, PlayerKinematics)>, KinematicsError> = tracks
        .into_par_iter()
        .map(|(player, (team, periods))| {
            let mut pk = PlayerKinematics {
                team: Some(team),
                ..Default::default()
            };
            for (period, track) in periods {
                pk.presence.extend(track.iter().map(|tp| (period, tp.t_ms)));
                for piece in split_track(&track, kin.max_gap_ms) {
                    if piece.len() < 2 {
                        continue;
                    }
                    let signal = compute_speed(&player, period, piece, kin)?;
                    pk.signals.push((signal, piece.iter().map(|tp| tp.xy).collect()));
                }
            }
            Ok((player, pk))
        })
        .collect();
    Ok(built?.into_iter().collect())
}

/// Maximal chains of consecutive on-ball events by one player.
fn onball_windows(events: &[Event]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < events.len() {
        if !events[i].kind.is_on_ball() {
            i += 1;
            continue;
        }
        let mut j = i;
        while j + 1 < events.len()
            && events[j + 1].kind.is_on_ball()
            && events[j + 1].player_id == events[i].player_id
            && events[j + 1].period == events[i].period
        {
            j += 1;
        }
        out.push((i, j));
        i = j + 1;
    }
    out
}

struct Accum {
    ms: [i64; 3],
    dist: [f64; 3],
    hi: [f64; 3],
}

impl Default for Accum {
    fn default() -> Self {
        Self {
            ms: [0; 3],
            dist: [0.0; 3],
            hi: [0.0; 3],
        }
    }
}

fn phase_index(p: PhaseKind) -> usize {
    match p {
        PhaseKind::InPossession => 0,
        PhaseKind::OutOfPossession => 1,
        PhaseKind::OutOfPlay => 2,
    }
}

/// Runs the whole per-match chain.
pub fn analyze_match(bundle: &MatchBundle, cfg: &EngineConfig) -> Result<MatchArtifacts, PipelineError> {
    let meta = &bundle.meta;
    let frames = &bundle.frames;
    let events = &bundle.events;
    let step = cfg.possession.frame_step_ms;

    let segments = label_possessions(events, frames, meta, &cfg.possession)?;
    let players = kinematics(bundle, cfg)?;
    let roles = build_role_timeline(frames, events, &segments, meta, &cfg.formations);
    let goalkeepers = meta.goalkeepers();
    let spans = period_spans(frames, step);
    let surrogate = SurrogateEpv { pitch: meta.pitch };
    let provider: &dyn EpvProvider = match &bundle.epv {
        Some(f) => f,
        None => &surrogate,
    };
    let tol = cfg.valuation.frame_tolerance_ms;

    // On-ball actions and receptions.
    let mut actions = ActionsArtifact::default();
    let mut windows_by_player: BTreeMap<PlayerId, Vec<(Period, i64, i64)>> = BTreeMap::new();
    for (a, b) in onball_windows(events) {
        let (first, last) = (&events[a], &events[b]);
        let pk = players.get(&first.player_id);
        let speed = pk.and_then(|k| k.max_speed(first.period, first.t_ms, last.t_ms, tol));
        let pf = period_frames(frames, first.period);
        let epv = match (nearest_frame(pf, first.t_ms, tol), nearest_frame(pf, last.t_ms, tol)) {
            (Some(f0), Some(f1)) => match (provider.evaluate(f0, &first.team_id), provider.evaluate(f1, &first.team_id)) {
                (Ok(v0), Ok(v1)) => Some(v1 - v0),
                _ => None,
            },
            _ => None,
        };
        windows_by_player
            .entry(first.player_id.clone())
            .or_default()
            .push((first.period, first.t_ms, last.t_ms));
        actions.actions.push(OnBallAction {
            player_id: first.player_id.clone(),
            team_id: first.team_id.clone(),
            role: roles.role_at(&first.player_id, first.period, first.t_ms),
            period: first.period,
            t_start: first.t_ms,
            t_end: last.t_ms,
            speed_kmh: speed,
            category: speed.and_then(|s| cfg.thresholds.categorize(s).ok()),
            epv_added: epv,
        });
    }
    for e in events.iter().filter(|e| e.kind == EventKind::Reception) {
        let t_ref = e.t_ms - cfg.reception_lookback_ms;
        let Some(&(_, start, _)) = spans.iter().find(|s| s.0 == e.period) else { continue };
        if t_ref < start {
            continue;
        }
        let Some(speed) = players.get(&e.player_id).and_then(|k| k.speed_at(e.period, t_ref, tol)) else {
            continue;
        };
        let Ok(category) = cfg.thresholds.categorize(speed) else { continue };
        actions.receptions.push(ReceptionSample {
            player_id: e.player_id.clone(),
            team_id: e.team_id.clone(),
            role: roles.role_at(&e.player_id, e.period, e.t_ms),
            period: e.period,
            t_ms: e.t_ms,
            speed_kmh: speed,
            category,
        });
    }

    // Runs in context.
    let tactical_ctx = RunContext {
        pitch: &meta.pitch,
        goalkeepers: &goalkeepers,
        config: &cfg.tactical,
    };
    let val_ctx = RunValuationContext {
        match_id: &meta.match_id,
        pitch: &meta.pitch,
        frames,
        segments: &segments,
        roles: &roles,
        config: &cfg.valuation,
    };
    let per_player: Result<Vec<(Vec<RunRecord>, Vec<_>)>, KinematicsError> = players
        .par_iter()
        .map(|(player, pk)| {
            let team = pk.team.clone().expect("tracked players have a team");
            let opponent = meta.opponent(&team).cloned().unwrap_or_else(|| team.clone());
            let wins = windows_by_player.get(player);
            let mut records = Vec::new();
            let mut samples = Vec::new();
            for (signal, positions) in &pk.signals {
                let pf = period_frames(frames, signal.period);
                for run in segment_runs(signal, positions, &cfg.thresholds, &cfg.kinematics)? {
                    let seg = segment_at(&segments, run.period, run.t_valley_end);
                    let phase = phase_of(seg, &team);
                    let (mut movement, mut unclassified) = (None, None);
                    if run.is_hi && phase == PhaseKind::InPossession {
                        match classify_run(&run, &team, &opponent, pf, tactical_ctx) {
                            RunClass::Movement(m) => movement = Some(m),
                            RunClass::Unclassified(u) => unclassified = Some(u),
                        }
                    }
                    let onball = wins.is_some_and(|w| {
                        w.iter()
                            .any(|&(p, a, b)| p == run.period && a <= run.t_next_valley_start && run.t_valley_end <= b)
                    });
                    if run.is_hi {
                        if let Ok(s) = value_run(&run, &team, &val_ctx, provider) {
                            samples.push(s);
                        }
                    }
                    records.push(RunRecord {
                        team_id: team.clone(),
                        phase,
                        role: roles.role_at(&run.player_id, run.period, run.t_valley_end),
                        attack_type: seg.and_then(|s| s.attack_type).filter(|_| phase == PhaseKind::InPossession),
                        defense_type: seg.and_then(|s| s.defense_type),
                        movement,
                        unclassified,
                        onball,
                        run,
                    });
                }
            }
            Ok((records, samples))
        })
        .collect();
    let mut runs = Vec::new();
    let mut samples = Vec::new();
    for (r, s) in per_player? {
        runs.extend(r);
        samples.extend(s);
    }

    let ledger = build_ledger(meta, &segments, &players, &|p, period, t| roles.role_at(p, period, t), &spans, cfg);
    Ok(MatchArtifacts {
        match_id: meta.match_id.clone(),
        runs,
        segments,
        roles,
        samples,
        actions,
        ledger,
    })
}

fn build_ledger(
    meta: &MatchMeta,
    segments: &[PossessionSegment],
    players: &BTreeMap<PlayerId, PlayerKinematics>,
    role_at: &dyn Fn(&PlayerId, Period, i64) -> Option<Role>,
    spans: &[(Period, i64, i64)],
    cfg: &EngineConfig,
) -> MatchLedger {
    let step = cfg.possession.frame_step_ms;
    let hi_kmh = cfg.thresholds.high_intensity();
    let duration_ms: i64 = spans.iter().map(|(_, a, b)| b - a).sum();
    let mut offsets = BTreeMap::new();
    let mut acc = 0;
    for &(p, a, b) in spans {
        offsets.insert(p, (acc, a));
        acc += b - a;
    }
    let minute_of = |period: Period, t: i64| -> u32 {
        let (off, start) = offsets.get(&period).copied().unwrap_or((0, t));
        ((off + t - start).max(0) / 60_000) as u32
    };
    let n_minutes = ((duration_ms + 59_999) / 60_000) as u32;

    let mut rows: BTreeMap<(PlayerId, Option<Role>), (TeamId, Accum)> = BTreeMap::new();
    let mut minute_acc: BTreeMap<(TeamId, u32), (i64, f64, f64)> = BTreeMap::new();
    for (player, pk) in players {
        let team = pk.team.clone().expect("tracked players have a team");
        for &(period, t) in &pk.presence {
            let phase = phase_of(segment_at(segments, period, t), &team);
            let key = (player.clone(), role_at(player, period, t));
            rows.entry(key).or_insert_with(|| (team.clone(), Accum::default())).1.ms[phase_index(phase)] += step;
        }
        for (signal, _) in &pk.signals {
            for (i, s) in signal.samples.iter().enumerate().skip(1) {
                let d = signal.step_m(i);
                let phase = phase_of(segment_at(segments, signal.period, s.t_ms), &team);
                let key = (player.clone(), role_at(player, signal.period, s.t_ms));
                let acc = &mut rows.entry(key).or_insert_with(|| (team.clone(), Accum::default())).1;
                let k = phase_index(phase);
                acc.dist[k] += d;
                let is_hi = s.smoothed_kmh >= hi_kmh;
                if is_hi {
                    acc.hi[k] += d;
                }
                if phase == PhaseKind::OutOfPossession {
                    let m = minute_acc.entry((team.clone(), minute_of(signal.period, s.t_ms))).or_default();
                    m.1 += d;
                    if is_hi {
                        m.2 += d;
                    }
                }
            }
        }
    }

    let team_ids: Vec<TeamId> = meta.teams().iter().map(|t| t.id.clone()).collect();
    for seg in segments {
        let Some(owner) = &seg.team_id else { continue };
        for team in team_ids.iter().filter(|t| *t != owner) {
            // Split the defending span across match minutes.
            let mut t = seg.t_start;
            while t < seg.t_end {
                let m = minute_of(seg.period, t);
                let (off, start) = offsets.get(&seg.period).copied().unwrap_or((0, seg.t_start));
                let minute_end = start + (i64::from(m) + 1) * 60_000 - off;
                let end = minute_end.min(seg.t_end);
                minute_acc.entry((team.clone(), m)).or_default().0 += end - t;
                t = end;
            }
        }
    }

    let mut teams = Vec::new();
    for tm in meta.teams() {
        let id = &tm.id;
        let opponent = meta.opponent(id).cloned().unwrap_or_else(|| id.clone());
        let mut ledger = TeamLedger {
            team_id: id.clone(),
            opponent_id: opponent.clone(),
            in_possession_ms: 0,
            out_of_possession_ms: 0,
            out_of_play_ms: 0,
            direct_play_ms: 0,
            high_press_ms: 0,
            distance_in_m: 0.0,
            distance_out_m: 0.0,
            hi_distance_in_m: 0.0,
            hi_distance_out_m: 0.0,
            xg: tm.xg,
            opponent_xg: meta.team(&opponent).and_then(|o| o.xg).filter(|_| &opponent != id),
        };
        for seg in segments {
            let d = seg.duration_ms();
            match phase_of(Some(seg), id) {
                PhaseKind::InPossession => {
                    ledger.in_possession_ms += d;
                    if seg.attack_type == Some(AttackType::DirectPlay) {
                        ledger.direct_play_ms += d;
                    }
                }
                PhaseKind::OutOfPossession => {
                    ledger.out_of_possession_ms += d;
                    if seg.defense_type == Some(DefenseType::HighPressure) {
                        ledger.high_press_ms += d;
                    }
                }
                PhaseKind::OutOfPlay => ledger.out_of_play_ms += d,
            }
        }
        for ((_, _), (team, a)) in &rows {
            if team == id {
                ledger.distance_in_m += a.dist[0];
                ledger.distance_out_m += a.dist[1];
                ledger.hi_distance_in_m += a.hi[0];
                ledger.hi_distance_out_m += a.hi[1];
            }
        }
        teams.push(ledger);
    }

    let players = rows
        .into_iter()
        .map(|((player_id, role), (team_id, a))| PlayerLedgerRow {
            player_id,
            team_id,
            role,
            in_possession_ms: a.ms[0],
            out_of_possession_ms: a.ms[1],
            out_of_play_ms: a.ms[2],
            distance_in_m: a.dist[0],
            distance_out_m: a.dist[1],
            hi_distance_in_m: a.hi[0],
            hi_distance_out_m: a.hi[1],
        })
        .collect();

    let mut minutes = Vec::new();
    for id in &team_ids {
        for m in 0..n_minutes {
            let (ms, d, hi) = minute_acc.get(&(id.clone(), m)).copied().unwrap_or_default();
            minutes.push(MinuteRow {
                team_id: id.clone(),
                minute: m,
                out_of_possession_ms: ms,
                distance_m: d,
                hi_distance_m: hi,
            });
        }
    }
    MatchLedger {
        duration_ms,
        teams,
        players,
        minutes,
    }
}
