//! Reading a match directory and linting it.
//!
//! A match directory holds `meta.json`, `tracking.jsonl`, `events.json` and
//! optionally `epv.csv`.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::format::{read_events, read_meta, read_tracking, FormatError};
use crate::model::{Event, Frame, MatchMeta, Period, PlayerId, TeamId};
use crate::pipeline::MatchBundle;
use crate::valuation::FileEpv;

pub const META_FILE: &str = "meta.json";
pub const TRACKING_FILE: &str = "tracking.jsonl";
pub const EVENTS_FILE: &str = "events.json";
pub const EPV_FILE: &str = "epv.csv";

/// Tolerance around the pitch for event locations and tracked points.
pub const BOUNDS_MARGIN_M: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchFiles {
    pub meta: PathBuf,
    pub tracking: PathBuf,
    pub events: PathBuf,
    pub epv: Option<PathBuf>,
}

impl MatchFiles {
    pub fn in_dir(dir: &Path) -> Self {
        let epv = dir.join(EPV_FILE);
        Self {
            meta: dir.join(META_FILE),
            tracking: dir.join(TRACKING_FILE),
            events: dir.join(EVENTS_FILE),
            epv: epv.exists().then_some(epv),
        }
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Open { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Format { path: PathBuf, source: FormatError },
    #[error("{path}: {message}")]
    Epv { path: PathBuf, message: String },
    #[error("match {match_id} failed validation: {}", first_error(.report))]
    Invalid { match_id: String, report: Box<LintReport> },
}

fn first_error(report: &LintReport) -> String {
    let errors: Vec<&LintIssue> = report.errors().collect();
    match errors.first() {
        Some(e) if errors.len() > 1 => format!("{} (and {} more)", e.message, errors.len() - 1),
        Some(e) => e.message.clone(),
        None => String::new(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LintKind {
    /// Frames further apart than the bridging tolerance; the tracking
    /// sequence is split there.
    FrameGap,
    /// Frames closer than nominal or out of order.
    TimeOrder,
    DuplicateId,
    UnknownPlayer,
    TooManyPlayers,
    OutOfBounds,
    EventOutOfBounds,
    EventUnknownPlayer,
    EventOrder,
}

impl LintKind {
    fn severity(self) -> Severity {
        match self {
            LintKind::FrameGap | LintKind::OutOfBounds => Severity::Warning,
            _ => Severity::Error,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LintIssue {
    pub kind: LintKind,
    pub severity: Severity,
    pub period: Period,
    pub t_ms: i64,
    pub message: String,
}

/// A run of frames without a gap above the tolerance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceSpan {
    pub period: Period,
    pub t_start: i64,
    pub t_end: i64,
    pub frames: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LintReport {
    pub match_id: String,
    pub frames: usize,
    pub events: usize,
    pub sequences: Vec<SequenceSpan>,
    /// Out-of-bounds tracked points are summarized, one issue per player.
    pub issues: Vec<LintIssue>,
}

impl LintReport {
    pub fn is_clean(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn errors(&self) -> impl Iterator<Item = &LintIssue> {
        self.issues.iter().filter(|i| i.severity == Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &LintIssue> {
        self.issues.iter().filter(|i| i.severity == Severity::Warning)
    }
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub bundle: MatchBundle,
    pub report: LintReport,
}

fn open(path: &Path) -> Result<BufReader<File>, IngestError> {
    File::open(path).map(BufReader::new).map_err(|source| IngestError::Open {
        path: path.to_path_buf(),
        source,
    })
}

fn format_err(path: &Path) -> impl FnOnce(FormatError) -> IngestError + '_ {
    move |source| IngestError::Format {
        path: path.to_path_buf(),
        source,
    }
}

/// Reads and lints one match. Warnings are kept in the report; any error
/// level issue rejects the match.
pub fn ingest(files: &MatchFiles, max_gap_ms: i64, nominal_dt_ms: i64) -> Result<Ingested, IngestError> {
    let meta = read_meta(open(&files.meta)?).map_err(format_err(&files.meta))?;
    let frames = read_tracking(open(&files.tracking)?, &meta).map_err(format_err(&files.tracking))?;
    let events = read_events(open(&files.events)?).map_err(format_err(&files.events))?;
    let epv = match &files.epv {
        Some(path) => Some(FileEpv::from_reader(open(path)?).map_err(|e| IngestError::Epv {
            path: path.clone(),
            message: e.to_string(),
        })?),
        None => None,
    };
    let report = lint(&meta, &frames, &events, max_gap_ms, nominal_dt_ms);
    if report.errors().next().is_some() {
        return Err(IngestError::Invalid {
            match_id: meta.match_id.clone(),
            report: Box::new(report),
        });
    }
    Ok(Ingested {
        bundle: MatchBundle {
            meta,
            frames,
            events,
            epv,
        },
        report,
    })
}

fn issue(kind: LintKind, period: Period, t_ms: i64, message: String) -> LintIssue {
    LintIssue {
        kind,
        severity: kind.severity(),
        period,
        t_ms,
        message,
    }
}

/// Checks frame spacing, identities and bounds, and splits the tracking
/// into sequences at gaps longer than `max_gap_ms`.
pub fn lint(meta: &MatchMeta, frames: &[Frame], events: &[Event], max_gap_ms: i64, nominal_dt_ms: i64) -> LintReport {
    let mut issues = Vec::new();
    let mut sequences: Vec<SequenceSpan> = Vec::new();
    let roster: BTreeMap<&PlayerId, &TeamId> = meta
        .teams()
        .into_iter()
        .flat_map(|t| t.players.iter().map(move |p| (&p.id, &t.id)))
        .collect();
    let pitch = &meta.pitch;
    // (player) -> (count, first period, first t)
    let mut outside: BTreeMap<PlayerId, (usize, Period, i64)> = BTreeMap::new();

    for (i, f) in frames.iter().enumerate() {
        match (i.checked_sub(1).map(|j| &frames[j]), sequences.last_mut()) {
            (Some(prev), Some(seq)) if prev.period == f.period => {
                let dt = f.t_ms - prev.t_ms;
                if dt <= 0 || dt < nominal_dt_ms / 2 {
                    issues.push(issue(
                        LintKind::TimeOrder,
                        f.period,
                        f.t_ms,
                        format!("frame {} at {} ms follows {} ms", i + 1, f.t_ms, prev.t_ms),
                    ));
                }
                if dt > max_gap_ms {
                    issues.push(issue(
                        LintKind::FrameGap,
                        f.period,
                        prev.t_ms,
                        format!("{dt} ms gap after {} ms in period {}; sequence split", prev.t_ms, f.period),
                    ));
                    sequences.push(SequenceSpan {
                        period: f.period,
                        t_start: f.t_ms,
                        t_end: f.t_ms,
                        frames: 1,
                    });
                } else {
                    seq.t_end = f.t_ms;
                    seq.frames += 1;
                }
            }
            (prev, _) => {
                if let Some(prev) = prev {
                    if prev.period > f.period {
                        issues.push(issue(
                            LintKind::TimeOrder,
                            f.period,
                            f.t_ms,
                            format!("frame {} in period {} follows period {}", i + 1, f.period, prev.period),
                        ));
                    }
                }
                sequences.push(SequenceSpan {
                    period: f.period,
                    t_start: f.t_ms,
                    t_end: f.t_ms,
                    frames: 1,
                });
            }
        }

        let mut seen = BTreeSet::new();
        let mut per_team: BTreeMap<&TeamId, usize> = BTreeMap::new();
        for p in &f.players {
            if !seen.insert(&p.player_id) {
                issues.push(issue(
                    LintKind::DuplicateId,
                    f.period,
                    f.t_ms,
                    format!("player {} appears twice in frame {}", p.player_id, i + 1),
                ));
            }
            if roster.get(&p.player_id) != Some(&&p.team_id) {
                issues.push(issue(
                    LintKind::UnknownPlayer,
                    f.period,
                    f.t_ms,
                    format!("player {} of team {} in frame {} is not on the roster", p.player_id, p.team_id, i + 1),
                ));
            }
            *per_team.entry(&p.team_id).or_default() += 1;
            if !pitch.contains(p.xy, BOUNDS_MARGIN_M) {
                outside.entry(p.player_id.clone()).or_insert((0, f.period, f.t_ms)).0 += 1;
            }
        }
        for (team, n) in per_team {
            if n > 11 {
                issues.push(issue(
                    LintKind::TooManyPlayers,
                    f.period,
                    f.t_ms,
                    format!("team {team} has {n} players in frame {}", i + 1),
                ));
            }
        }
    }
    for (player, (count, period, t)) in outside {
        issues.push(issue(
            LintKind::OutOfBounds,
            period,
            t,
            format!("player {player} is more than {BOUNDS_MARGIN_M} m off the pitch in {count} frames, first at {period}:{t}"),
        ));
    }

    for (i, e) in events.iter().enumerate() {
        if i > 0 && (events[i - 1].period, events[i - 1].t_ms) > (e.period, e.t_ms) {
            issues.push(issue(
                LintKind::EventOrder,
                e.period,
                e.t_ms,
                format!("event {} at {}:{} is earlier than the one before", i + 1, e.period, e.t_ms),
            ));
        }
        if roster.get(&e.player_id) != Some(&&e.team_id) {
            issues.push(issue(
                LintKind::EventUnknownPlayer,
                e.period,
                e.t_ms,
                format!("event {} names player {} of team {} who is not on the roster", i + 1, e.player_id, e.team_id),
            ));
        }
        let outside = !pitch.contains(e.location, BOUNDS_MARGIN_M)
            || e.end_location.is_some_and(|p| !pitch.contains(p, BOUNDS_MARGIN_M));
        if outside {
            issues.push(issue(
                LintKind::EventOutOfBounds,
                e.period,
                e.t_ms,
                format!("event {} is located off the pitch", i + 1),
            ));
        }
    }

    LintReport {
        match_id: meta.match_id.clone(),
        frames: frames.len(),
        events: events.len(),
        sequences,
        issues,
    }
}
