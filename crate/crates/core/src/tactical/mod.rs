//! Opponent structure around each run: dynamic defensive lines, the team
//! block, pitch zones relative to both, and the movement type of a run.
//!
//! Everything here works in the attacking team's normalized frame: the
//! attackers play towards `+x`, so the defenders protect the goal at
//! `x = length` and "behind the last line" means a larger `x`.

mod hull;
mod lines;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use hull::{build_block, clip_left_of, polygon_area, TeamBlock};
pub use lines::{fit_lines, DynamicLines};

use crate::kinematics::RunEffort;
use crate::model::{normalize_point, Frame, PitchSpec, PlayerId, Point2, TeamId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TacticalError {
    #[error("need at least 3 outfield defenders, {visible} visible")]
    TooFewDefenders { visible: usize },
    #[error("block of {points} points is degenerate (fewer than 3 or collinear)")]
    DegenerateBlock { points: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackBoundary {
    /// "Behind the last line" measured from the last line's centroid.
    #[default]
    LastLine,
    /// Measured from the deepest outfield defender.
    DeepestDefender,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TacticalConfig {
    pub back_boundary: BackBoundary,
    /// Maximum distance between a key moment and the frame used for it.
    pub frame_tolerance_ms: i64,
}

impl Default for TacticalConfig {
    fn default() -> Self {
        Self {
            back_boundary: BackBoundary::LastLine,
            frame_tolerance_ms: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Zone {
    Inside,
    Wing,
    Back,
    Front,
}

impl Zone {
    pub fn name(self) -> &'static str {
        match self {
            Zone::Inside => "inside",
            Zone::Wing => "wing",
            Zone::Back => "back",
            Zone::Front => "front",
        }
    }
}

/// Zone of `point` given the defending team's lines and block.
pub fn classify_zone(point: Point2, lines: &DynamicLines, block: &TeamBlock) -> Zone {
    zone_with_back_line(point, lines.last(), lines.first(), block)
}

fn zone_with_back_line(point: Point2, back_x: f64, first_x: f64, block: &TeamBlock) -> Zone {
    if point.x > back_x {
        Zone::Back
    } else if point.x < first_x {
        Zone::Front
    } else if block.contains(point) {
        Zone::Inside
    } else {
        Zone::Wing
    }
}

/// Origin and destination zone of a high-intensity run. Only runs starting
/// inside the block or on a wing and ending inside, on a wing or behind the
/// last line are typed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MovementType {
    InsideToInside,
    InsideToWing,
    InsideToBack,
    WingToInside,
    WingToWing,
    WingToBack,
}

impl MovementType {
    pub const ALL: [MovementType; 6] = [
        MovementType::InsideToInside,
        MovementType::InsideToWing,
        MovementType::InsideToBack,
        MovementType::WingToInside,
        MovementType::WingToWing,
        MovementType::WingToBack,
    ];

    pub fn from_zones(origin: Zone, destination: Zone) -> Option<MovementType> {
        use MovementType::*;
        Some(match (origin, destination) {
            (Zone::Inside, Zone::Inside) => InsideToInside,
            (Zone::Inside, Zone::Wing) => InsideToWing,
            (Zone::Inside, Zone::Back) => InsideToBack,
            (Zone::Wing, Zone::Inside) => WingToInside,
            (Zone::Wing, Zone::Wing) => WingToWing,
            (Zone::Wing, Zone::Back) => WingToBack,
            _ => return None,
        })
    }

    pub fn origin(self) -> Zone {
        match self {
            MovementType::InsideToInside | MovementType::InsideToWing | MovementType::InsideToBack => Zone::Inside,
            _ => Zone::Wing,
        }
    }

    pub fn destination(self) -> Zone {
        match self {
            MovementType::InsideToInside | MovementType::WingToInside => Zone::Inside,
            MovementType::InsideToWing | MovementType::WingToWing => Zone::Wing,
            MovementType::InsideToBack | MovementType::WingToBack => Zone::Back,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MovementType::InsideToInside => "inside_to_inside",
            MovementType::InsideToWing => "inside_to_wing",
            MovementType::InsideToBack => "inside_to_back",
            MovementType::WingToInside => "wing_to_inside",
            MovementType::WingToWing => "wing_to_wing",
            MovementType::WingToBack => "wing_to_back",
        }
    }

    pub fn parse(s: &str) -> Option<MovementType> {
        MovementType::ALL.into_iter().find(|m| m.name() == s)
    }
}

impl fmt::Display for MovementType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum Unclassified {
    /// Zone pair outside the six movement types (front or back origin, front
    /// destination).
    ZonePair { origin: Zone, destination: Zone },
    NoFrame { t_ms: i64 },
    Geometry { t_ms: i64, error: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunClass {
    Movement(MovementType),
    Unclassified(Unclassified),
}

impl RunClass {
    pub fn movement(&self) -> Option<MovementType> {
        match self {
            RunClass::Movement(m) => Some(*m),
            RunClass::Unclassified(_) => None,
        }
    }
}

/// Lines and block of one defending team at one instant, in the attacking
/// team's normalized frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefensiveShape {
    pub lines: DynamicLines,
    pub block: TeamBlock,
    pub deepest_x: f64,
    pub defenders: Vec<Point2>,
}

impl DefensiveShape {
    pub fn from_points(defenders: Vec<Point2>) -> Result<Self, TacticalError> {
        let xs: Vec<f64> = defenders.iter().map(|p| p.x).collect();
        let lines = fit_lines(&xs)?;
        let block = build_block(&defenders)?;
        let deepest_x = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(Self {
            lines,
            block,
            deepest_x,
            defenders,
        })
    }

    pub fn zone(&self, p: Point2, mode: BackBoundary) -> Zone {
        let back = match mode {
            BackBoundary::LastLine => self.lines.last(),
            BackBoundary::DeepestDefender => self.deepest_x,
        };
        zone_with_back_line(p, back, self.lines.first(), &self.block)
    }
}

/// Outfield positions of `defending` in `frame`, normalized so that
/// `attacking` plays towards `+x`. Goalkeepers are left out.
pub fn defender_points(
    frame: &Frame,
    attacking: &TeamId,
    defending: &TeamId,
    goalkeepers: &BTreeSet<PlayerId>,
    pitch: &PitchSpec,
) -> Option<Vec<Point2>> {
    let dir = frame.attacking_direction.get(attacking).copied()?;
    Some(
        frame
            .team_players(defending)
            .filter(|p| !goalkeepers.contains(&p.player_id))
            .map(|p| normalize_point(p.xy, dir, pitch))
            .collect(),
    )
}

/// Frame nearest to `t_ms` within `tolerance_ms` in a time-sorted slice.
pub fn nearest_frame(frames: &[Frame], t_ms: i64, tolerance_ms: i64) -> Option<&Frame> {
    let idx = frames.partition_point(|f| f.t_ms < t_ms);
    [idx.checked_sub(1), Some(idx)]
        .into_iter()
        .flatten()
        .filter_map(|i| frames.get(i))
        .filter(|f| (f.t_ms - t_ms).abs() <= tolerance_ms)
        .min_by_key(|f| (f.t_ms - t_ms).abs())
}

/// Static context shared by every run classification in a match.
#[derive(Debug, Clone, Copy)]
pub struct RunContext<'a> {
    pub pitch: &'a PitchSpec,
    pub goalkeepers: &'a BTreeSet<PlayerId>,
    pub config: &'a TacticalConfig,
}

/// Movement type of `run` by a player of `attacking` against `defending`.
///
/// The origin zone uses the opponent's shape when the starting valley ends
/// and the destination zone its shape when the peak ends; `frames` must be
/// the time-sorted frames of the run's period.
pub fn classify_run(
    run: &RunEffort,
    attacking: &TeamId,
    defending: &TeamId,
    frames: &[Frame],
    ctx: RunContext<'_>,
) -> RunClass {
    let zone_at = |t_ms: i64, raw_point: Point2| -> Result<Zone, Unclassified> {
        let frame = nearest_frame(frames, t_ms, ctx.config.frame_tolerance_ms).ok_or(Unclassified::NoFrame { t_ms })?;
        let dir = frame
            .attacking_direction
            .get(attacking)
            .copied()
            .ok_or(Unclassified::NoFrame { t_ms })?;
        let pts = defender_points(frame, attacking, defending, ctx.goalkeepers, ctx.pitch).unwrap_or_default();
        let shape = DefensiveShape::from_points(pts).map_err(|e| Unclassified::Geometry {
            t_ms,
            error: e.to_string(),
        })?;
        Ok(shape.zone(normalize_point(raw_point, dir, ctx.pitch), ctx.config.back_boundary))
    };
    let origin = match zone_at(run.t_valley_end, run.origin) {
        Ok(z) => z,
        Err(u) => return RunClass::Unclassified(u),
    };
    let destination = match zone_at(run.t_peak_end, run.destination) {
        Ok(z) => z,
        Err(u) => return RunClass::Unclassified(u),
    };
    match MovementType::from_zones(origin, destination) {
        Some(m) => RunClass::Movement(m),
        None => RunClass::Unclassified(Unclassified::ZonePair { origin, destination }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Direction, Period, PlayerPosition};
    use std::collections::BTreeMap;
    use std::sync::Arc;

    fn p(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    /// A 4-4-2 style defending block between x = 40 and x = 70.
    fn shape() -> DefensiveShape {
        let mut pts = Vec::new();
        for y in [10.0, 26.0, 42.0, 58.0] {
            pts.push(p(70.0, y));
            pts.push(p(55.0, y));
        }
        pts.push(p(40.0, 28.0));
        pts.push(p(40.0, 40.0));
        DefensiveShape::from_points(pts).unwrap()
    }

    #[test]
    fn zone_examples() {
        let s = shape();
        assert_eq!(s.lines.line_x, [40.0, 55.0, 70.0]);
        assert_eq!(classify_zone(p(75.0, 34.0), &s.lines, &s.block), Zone::Back);
        assert_eq!(classify_zone(s.block.centroid(), &s.lines, &s.block), Zone::Inside);
        assert_eq!(classify_zone(p(55.0, 1.0), &s.lines, &s.block), Zone::Wing);
        assert_eq!(classify_zone(p(30.0, 34.0), &s.lines, &s.block), Zone::Front);
    }

    #[test]
    fn deepest_defender_mode() {
        let mut pts = shape().defenders;
        pts.push(p(76.0, 34.0));
        let s = DefensiveShape::from_points(pts).unwrap();
        let q = p(74.0, 34.0);
        assert_eq!(s.zone(q, BackBoundary::LastLine), Zone::Back);
        assert_eq!(s.zone(q, BackBoundary::DeepestDefender), Zone::Inside);
    }

    #[test]
    fn grid_gets_exactly_one_zone_and_is_mirror_symmetric() {
        let s = shape();
        let mirrored = DefensiveShape::from_points(s.defenders.iter().map(|q| p(q.x, 68.0 - q.y)).collect()).unwrap();
        for xi in 0..=105 {
            for yi in 0..=68 {
                let q = p(xi as f64, yi as f64);
                let z = classify_zone(q, &s.lines, &s.block);
                let zm = classify_zone(p(q.x, 68.0 - q.y), &mirrored.lines, &mirrored.block);
                assert_eq!(z, zm, "at {q:?}");
            }
        }
    }

    #[test]
    fn movement_type_table() {
        assert_eq!(MovementType::from_zones(Zone::Inside, Zone::Back), Some(MovementType::InsideToBack));
        assert_eq!(MovementType::from_zones(Zone::Front, Zone::Back), None);
        assert_eq!(MovementType::from_zones(Zone::Back, Zone::Back), None);
        assert_eq!(MovementType::from_zones(Zone::Wing, Zone::Front), None);
        for m in MovementType::ALL {
            assert_eq!(MovementType::from_zones(m.origin(), m.destination()), Some(m));
            assert_eq!(MovementType::parse(m.name()), Some(m));
        }
    }

    fn frame_at(t_ms: i64, defenders: &[Point2], attacker_dir: Direction) -> Frame {
        let mut dirs = BTreeMap::new();
        dirs.insert(TeamId::new("h"), attacker_dir);
        dirs.insert(TeamId::new("a"), attacker_dir.flipped());
        let pitch = PitchSpec::default();
        let mut players: Vec<PlayerPosition> = defenders
            .iter()
            .enumerate()
            .map(|(i, &q)| PlayerPosition {
                player_id: PlayerId::new(format!("a{i}")),
                team_id: "a".into(),
                xy: normalize_point(q, attacker_dir, &pitch),
            })
            .collect();
        players.push(PlayerPosition {
            player_id: "agk".into(),
            team_id: "a".into(),
            xy: normalize_point(p(104.0, 34.0), attacker_dir, &pitch),
        });
        Frame {
            t_ms,
            period: Period::First,
            ball: p(50.0, 34.0),
            in_play: Some(true),
            players,
            attacking_direction: Arc::new(dirs),
        }
    }

    fn run(origin: Point2, destination: Point2) -> RunEffort {
        RunEffort {
            player_id: "h9".into(),
            period: Period::First,
            t_valley_end: 1000,
            t_peak_start: 2000,
            t_peak_end: 3000,
            t_next_valley_start: 4000,
            origin,
            destination,
            peak_speed: 25.0,
            distance_total: 20.0,
            distance_hi: 10.0,
            is_hi: true,
        }
    }

    fn classify(r: &RunEffort, frames: &[Frame]) -> RunClass {
        let gks: BTreeSet<PlayerId> = [PlayerId::new("agk")].into_iter().collect();
        let pitch = PitchSpec::default();
        let cfg = TacticalConfig::default();
        classify_run(
            r,
            &"h".into(),
            &"a".into(),
            frames,
            RunContext {
                pitch: &pitch,
                goalkeepers: &gks,
                config: &cfg,
            },
        )
    }

    #[test]
    fn inside_to_back_run() {
        let d = shape().defenders;
        let frames: Vec<_> = (0..50).map(|k| frame_at(k * 100, &d, Direction::PositiveX)).collect();
        let r = run(p(55.0, 34.0), p(80.0, 34.0));
        assert_eq!(classify(&r, &frames), RunClass::Movement(MovementType::InsideToBack));
    }

    #[test]
    fn run_classification_follows_attacking_direction() {
        // Same situation with the attacking team playing towards -x in raw
        // coordinates.
        let d = shape().defenders;
        let pitch = PitchSpec::default();
        let frames: Vec<_> = (0..50).map(|k| frame_at(k * 100, &d, Direction::NegativeX)).collect();
        let r = run(pitch.reflect(p(55.0, 34.0)), pitch.reflect(p(80.0, 34.0)));
        assert_eq!(classify(&r, &frames), RunClass::Movement(MovementType::InsideToBack));
    }

    #[test]
    fn wing_to_wing_fixed_point() {
        let d = shape().defenders;
        let frames: Vec<_> = (0..50).map(|k| frame_at(k * 100, &d, Direction::PositiveX)).collect();
        let r = run(p(55.0, 2.0), p(55.0, 2.0));
        assert_eq!(classify(&r, &frames), RunClass::Movement(MovementType::WingToWing));
    }

    #[test]
    fn front_origin_is_unclassified() {
        let d = shape().defenders;
        let frames: Vec<_> = (0..50).map(|k| frame_at(k * 100, &d, Direction::PositiveX)).collect();
        let r = run(p(20.0, 34.0), p(60.0, 34.0));
        assert_eq!(
            classify(&r, &frames),
            RunClass::Unclassified(Unclassified::ZonePair {
                origin: Zone::Front,
                destination: Zone::Inside
            })
        );
    }

    #[test]
    fn missing_geometry_is_unclassified() {
        let frames: Vec<_> = (0..50).map(|k| frame_at(k * 100, &[p(50.0, 30.0)], Direction::PositiveX)).collect();
        let r = run(p(55.0, 34.0), p(80.0, 34.0));
        assert!(matches!(classify(&r, &frames), RunClass::Unclassified(Unclassified::Geometry { t_ms: 1000, .. })));
        let r = run(p(55.0, 34.0), p(80.0, 34.0));
        assert!(matches!(classify(&r, &[]), RunClass::Unclassified(Unclassified::NoFrame { t_ms: 1000 })));
    }

    #[test]
    fn nearest_frame_respects_tolerance() {
        let d = shape().defenders;
        let frames: Vec<_> = [0, 100, 500].iter().map(|&t| frame_at(t, &d, Direction::PositiveX)).collect();
        assert_eq!(nearest_frame(&frames, 140, 200).unwrap().t_ms, 100);
        assert_eq!(nearest_frame(&frames, 320, 200).unwrap().t_ms, 500);
        assert!(nearest_frame(&frames, 800, 200).is_none());
    }
}
