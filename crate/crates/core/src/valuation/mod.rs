//! Possession value attached to high-intensity runs and the per-(player,
//! role) run influence regression.

mod ols;

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ols::{ols_qr, OlsError, OlsFit};

use crate::formations::RoleTimeline;
use crate::kinematics::RunEffort;
use crate::model::{normalize_point, Frame, PitchSpec, Period, PlayerId, Point2, Role, TeamId};
use crate::possession::PossessionSegment;
use crate::tactical::nearest_frame;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ValuationError {
    #[error("frame at t={t_ms} ms is out of play")]
    OutOfPlay { t_ms: i64 },
    #[error("no value for team {team} at period {period} t={t_ms} ms")]
    Missing { team: TeamId, period: Period, t_ms: i64 },
    #[error("team {0} has no attacking direction in the frame")]
    NoDirection(TeamId),
    #[error("epv file: {0}")]
    File(String),
}

/// Source of possession values in `[0, 1]` for the attacking team.
pub trait EpvProvider: Send + Sync {
    fn evaluate(&self, frame: &Frame, attacking: &TeamId) -> Result<f64, ValuationError>;
}

/// Closed-form stand-in: `logistic(-4 + 5 x/L - 2 |y - W/2| / (W/2))` on the
/// ball position in the attacking team's frame.
#[derive(Debug, Clone, Copy)]
pub struct SurrogateEpv {
    pub pitch: PitchSpec,
}

pub fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl SurrogateEpv {
    pub fn value_at(&self, ball: Point2) -> f64 {
        let half_w = self.pitch.width / 2.0;
        logistic(-4.0 + 5.0 * ball.x / self.pitch.length - 2.0 * (ball.y - half_w).abs() / half_w)
    }
}

impl EpvProvider for SurrogateEpv {
    fn evaluate(&self, frame: &Frame, attacking: &TeamId) -> Result<f64, ValuationError> {
        if !frame.is_in_play() {
            return Err(ValuationError::OutOfPlay { t_ms: frame.t_ms });
        }
        let dir = frame
            .attacking_direction
            .get(attacking)
            .copied()
            .ok_or_else(|| ValuationError::NoDirection(attacking.clone()))?;
        Ok(self.value_at(normalize_point(frame.ball, dir, &self.pitch)))
    }
}

/// Precomputed per-frame values from a CSV file with columns
/// `t_ms,team,value` and an optional `period` column (default 1).
#[derive(Debug, Clone, Default)]
pub struct FileEpv {
    values: BTreeMap<(TeamId, Period, i64), f64>,
}

#[derive(Deserialize)]
struct EpvRow {
    t_ms: i64,
    team: TeamId,
    value: f64,
    #[serde(default)]
    period: Option<u8>,
}

impl FileEpv {
    pub fn from_reader<R: Read>(r: R) -> Result<Self, ValuationError> {
        let mut values = BTreeMap::new();
        for (i, row) in csv::Reader::from_reader(r).deserialize::<EpvRow>().enumerate() {
            let row = row.map_err(|e| ValuationError::File(format!("row {}: {e}", i + 1)))?;
            let period = Period::try_from(row.period.unwrap_or(1))
                .map_err(|e| ValuationError::File(format!("row {}: {e}", i + 1)))?;
            if !(0.0..=1.0).contains(&row.value) {
                return Err(ValuationError::File(format!("row {}: value {} outside [0, 1]", i + 1, row.value)));
            }
            values.insert((row.team, period, row.t_ms), row.value);
        }
        Ok(Self { values })
    }

    pub fn from_path(path: &Path) -> Result<Self, ValuationError> {
        let f = std::fs::File::open(path).map_err(|e| ValuationError::File(format!("{}: {e}", path.display())))?;
        Self::from_reader(f)
    }
}

impl EpvProvider for FileEpv {
    fn evaluate(&self, frame: &Frame, attacking: &TeamId) -> Result<f64, ValuationError> {
        self.values
            .get(&(attacking.clone(), frame.period, frame.t_ms))
            .copied()
            .ok_or_else(|| ValuationError::Missing {
                team: attacking.clone(),
                period: frame.period,
                t_ms: frame.t_ms,
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ValuationConfig {
    /// `t2` is this long after the peak ends.
    pub post_peak_ms: i64,
    pub frame_tolerance_ms: i64,
    /// Samples needed for a (player, role) cell to enter the regression.
    pub min_cell_samples: usize,
}

impl Default for ValuationConfig {
    fn default() -> Self {
        Self {
            post_peak_ms: 2000,
            frame_tolerance_ms: 200,
            min_cell_samples: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunValueSample {
    pub match_id: String,
    pub player_id: PlayerId,
    pub role: Role,
    pub period: Period,
    pub t1: i64,
    pub t2: i64,
    pub epv_start: f64,
    pub epv_end: f64,
    pub epv_added: f64,
    pub angle: f64,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum Discard {
    NotHighIntensity,
    NotInPossession,
    PossessionChange,
    MissingFrame { t_ms: i64 },
    UnknownRole,
    Provider { message: String },
}

/// Angle (radians, in `[0, π/2]`) and distance from `origin` to the attacked
/// goal center, with `origin` in the attacking frame. At distance 0 the
/// angle is π/2.
pub fn goal_geometry(origin: Point2, pitch: &PitchSpec) -> (f64, f64) {
    let goal = pitch.attacked_goal();
    let distance = origin.distance(goal);
    if distance == 0.0 {
        return (distance, std::f64::consts::FRAC_PI_2);
    }
    let dx = (goal.x - origin.x).max(0.0);
    let dy = (goal.y - origin.y).abs();
    (distance, dy.atan2(dx))
}

/// Inputs shared by every run valued in one match.
pub struct RunValuationContext<'a> {
    pub match_id: &'a str,
    pub pitch: &'a PitchSpec,
    /// Frames of the whole match, sorted by period and time.
    pub frames: &'a [Frame],
    pub segments: &'a [PossessionSegment],
    pub roles: &'a RoleTimeline,
    pub config: &'a ValuationConfig,
}

fn possession_of(segments: &[PossessionSegment], period: Period, t_ms: i64) -> Option<&PossessionSegment> {
    let i = segments.partition_point(|s| (s.period, s.t_end) <= (period, t_ms));
    segments.get(i).filter(|s| s.contains(period, t_ms))
}

/// EPV added by one HI run of a player of `team`, or why it was discarded.
/// The discard decision never depends on the provider except for provider
/// errors.
pub fn value_run(
    run: &RunEffort,
    team: &TeamId,
    ctx: &RunValuationContext<'_>,
    provider: &dyn EpvProvider,
) -> Result<RunValueSample, Discard> {
    if !run.is_hi {
        return Err(Discard::NotHighIntensity);
    }
    let t1 = run.t_valley_end;
    let t2 = run.t_peak_end + ctx.config.post_peak_ms;
    let start = possession_of(ctx.segments, run.period, t1)
        .filter(|s| s.team_id.as_ref() == Some(team))
        .ok_or(Discard::NotInPossession)?;
    let end = possession_of(ctx.segments, run.period, t2).ok_or(Discard::PossessionChange)?;
    if end.possession_id != start.possession_id {
        return Err(Discard::PossessionChange);
    }
    let role = ctx.roles.role_at(&run.player_id, run.period, t1).ok_or(Discard::UnknownRole)?;
    let lo = ctx.frames.partition_point(|f| f.period < run.period);
    let hi = ctx.frames.partition_point(|f| f.period <= run.period);
    let period_frames = &ctx.frames[lo..hi];
    let f1 = nearest_frame(period_frames, t1, ctx.config.frame_tolerance_ms).ok_or(Discard::MissingFrame { t_ms: t1 })?;
    let f2 = nearest_frame(period_frames, t2, ctx.config.frame_tolerance_ms).ok_or(Discard::MissingFrame { t_ms: t2 })?;
    let provider_err = |e: ValuationError| Discard::Provider { message: e.to_string() };
    let epv_start = provider.evaluate(f1, team).map_err(provider_err)?;
    let epv_end = provider.evaluate(f2, team).map_err(provider_err)?;
    let dir = f1
        .attacking_direction
        .get(team)
        .copied()
        .ok_or_else(|| provider_err(ValuationError::NoDirection(team.clone())))?;
    let (distance, angle) = goal_geometry(normalize_point(run.origin, dir, ctx.pitch), ctx.pitch);
    Ok(RunValueSample {
        match_id: ctx.match_id.to_string(),
        player_id: run.player_id.clone(),
        role,
        period: run.period,
        t1,
        t2,
        epv_start,
        epv_end,
        epv_added: epv_end - epv_start,
        angle,
        distance,
    })
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("no (player, role) cell has enough samples")]
    NoCells,
    #[error("{samples} samples for {columns} columns")]
    TooFewSamples { samples: usize, columns: usize },
    #[error("design matrix is rank deficient: collinear columns {0:?}")]
    RankDeficient(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellCoefficient {
    pub player_id: PlayerId,
    pub role: Role,
    pub n_samples: usize,
    pub beta: f64,
    /// Absent for the reference cell, whose coefficient is fixed at 0.
    pub std_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunInfluenceModel {
    pub beta0: f64,
    pub beta_angle: f64,
    pub beta_distance: f64,
    pub se0: f64,
    pub se_angle: f64,
    pub se_distance: f64,
    pub reference: (PlayerId, Role),
    pub cells: Vec<CellCoefficient>,
    pub residual_variance: f64,
    pub n_samples: usize,
}

impl RunInfluenceModel {
    pub fn cell(&self, player: &PlayerId, role: Role) -> Option<&CellCoefficient> {
        self.cells.iter().find(|c| &c.player_id == player && c.role == role)
    }
}

/// Design matrix of the influence regression: columns `intercept`, `angle`,
/// `distance` and one indicator per non-reference cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub columns: Vec<String>,
    /// Row-major, `rows.len() == y.len()`.
    pub rows: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    /// Cells in column order; the first one is the reference.
    pub cells: Vec<((PlayerId, Role), usize)>,
}

/// Builds the design from samples sorted into a canonical order, keeping
/// cells with at least `min_cell_samples` samples (and, when given, listed in
/// `qualified`).
pub fn influence_design(
    samples: &[RunValueSample],
    min_cell_samples: usize,
    qualified: Option<&std::collections::BTreeSet<(PlayerId, Role)>>,
) -> Result<Design, FitError> {
    let mut sorted: Vec<&RunValueSample> = samples.iter().collect();
    sorted.sort_by(|a, b| {
        (&a.player_id, a.role, &a.match_id, a.period, a.t1)
            .cmp(&(&b.player_id, b.role, &b.match_id, b.period, b.t1))
            .then(a.epv_added.total_cmp(&b.epv_added))
    });
    let mut counts: BTreeMap<(PlayerId, Role), usize> = BTreeMap::new();
    for s in &sorted {
        *counts.entry((s.player_id.clone(), s.role)).or_insert(0) += 1;
    }
    let cells: Vec<((PlayerId, Role), usize)> = counts
        .into_iter()
        .filter(|(k, n)| *n >= min_cell_samples && qualified.is_none_or(|q| q.contains(k)))
        .collect();
    if cells.is_empty() {
        return Err(FitError::NoCells);
    }
    let index: BTreeMap<&(PlayerId, Role), usize> = cells.iter().enumerate().map(|(i, (k, _))| (k, i)).collect();
    let mut columns: Vec<String> = vec!["intercept".into(), "angle".into(), "distance".into()];
    columns.extend(cells.iter().skip(1).map(|((p, r), _)| format!("{p}:{r}")));
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for s in sorted {
        let Some(&ci) = index.get(&(s.player_id.clone(), s.role)) else {
            continue;
        };
        let mut row = vec![0.0; columns.len()];
        row[0] = 1.0;
        row[1] = s.angle;
        row[2] = s.distance;
        if ci > 0 {
            row[2 + ci] = 1.0;
        }
        rows.push(row);
        y.push(s.epv_added);
    }
    Ok(Design { columns, rows, y, cells })
}

/// Ordinary least squares fit of
/// `epv_added ~ b0 + b1 angle + b2 distance + sum_p bp E_p`
/// with the first (player, role) cell in canonical order as reference.
pub fn fit_influence(
    samples: &[RunValueSample],
    min_cell_samples: usize,
    qualified: Option<&std::collections::BTreeSet<(PlayerId, Role)>>,
) -> Result<RunInfluenceModel, FitError> {
    let design = influence_design(samples, min_cell_samples, qualified)?;
    let fit = ols_qr(&design.rows, &design.y).map_err(|e| match e {
        OlsError::TooFewRows { rows, columns } => FitError::TooFewSamples { samples: rows, columns },
        OlsError::RankDeficient(cols) => FitError::RankDeficient(cols.into_iter().map(|c| design.columns[c].clone()).collect()),
    })?;
    let cells = design
        .cells
        .iter()
        .enumerate()
        .map(|(i, ((p, r), n))| CellCoefficient {
            player_id: p.clone(),
            role: *r,
            n_samples: *n,
            beta: if i == 0 { 0.0 } else { fit.beta[2 + i] },
            std_error: (i > 0).then(|| fit.std_errors[2 + i]),
        })
        .collect();
    Ok(RunInfluenceModel {
        beta0: fit.beta[0],
        beta_angle: fit.beta[1],
        beta_distance: fit.beta[2],
        se0: fit.std_errors[0],
        se_angle: fit.std_errors[1],
        se_distance: fit.std_errors[2],
        reference: design.cells[0].0.clone(),
        cells,
        residual_variance: fit.residual_variance,
        n_samples: design.y.len(),
    })
}
