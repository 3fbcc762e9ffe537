//! Shared domain types and the coordinate conventions every analysis stage
//! relies on.
//!
//! Positions are in meters with the origin at the home team's left corner
//! flag: `x` runs along the pitch length, `y` along its width. Which goal a
//! team attacks is carried per frame; analyses call [`normalize_direction`]
//! to view a frame as if the team of interest attacked towards `+x`.

pub mod format;

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("unknown team id `{0}`")]
    UnknownTeam(TeamId),
    #[error("no attacking direction recorded for team `{0}`")]
    MissingDirection(TeamId),
    #[error("negative speed {0} km/h")]
    NegativeSpeed(f64),
    #[error("invalid pitch dimensions {length} x {width}")]
    InvalidPitch { length: f64, width: f64 },
    #[error("speed thresholds must be strictly increasing, got {0:?}")]
    InvalidThresholds([f64; 3]),
    #[error("unknown period {0}")]
    UnknownPeriod(u8),
}

macro_rules! string_id {
    ($name:ident) => {
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(Arc<str>);

        impl $name {
            pub fn new(id: impl AsRef<str>) -> Self {
                Self(Arc::from(id.as_ref()))
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self::new(s)
            }
        }

        impl std::borrow::Borrow<str> for $name {
            fn borrow(&self) -> &str {
                &self.0
            }
        }
    };
}

string_id!(PlayerId);
string_id!(TeamId);

/// A point on the pitch plane, serialized as `[x, y]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    /// z-component of `self × other`.
    pub fn cross(self, other: Point2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn lerp(self, other: Point2, t: f64) -> Point2 {
        Point2::new(
            self.x + (other.x - self.x) * t,
            self.y + (other.y - self.y) * t,
        )
    }
}

impl From<[f64; 2]> for Point2 {
    fn from([x, y]: [f64; 2]) -> Self {
        Self { x, y }
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, rhs: f64) -> Point2 {
        Point2::new(self.x * rhs, self.y * rhs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PitchDims", into = "PitchDims")]
pub struct PitchSpec {
    pub length: f64,
    pub width: f64,
    /// Center of the goal at `x = 0`.
    pub goal_center_home: Point2,
    /// Center of the goal at `x = length`.
    pub goal_center_away: Point2,
}

#[derive(Serialize, Deserialize)]
struct PitchDims {
    length: f64,
    width: f64,
}

impl TryFrom<PitchDims> for PitchSpec {
    type Error = ModelError;
    fn try_from(d: PitchDims) -> Result<Self, ModelError> {
        PitchSpec::new(d.length, d.width)
    }
}

impl From<PitchSpec> for PitchDims {
    fn from(p: PitchSpec) -> Self {
        PitchDims {
            length: p.length,
            width: p.width,
        }
    }
}

impl Default for PitchSpec {
    fn default() -> Self {
        Self::new(105.0, 68.0).expect("default pitch is valid")
    }
}

impl PitchSpec {
    pub fn new(length: f64, width: f64) -> Result<Self, ModelError> {
        if !(length > 0.0 && width > 0.0 && length.is_finite() && width.is_finite()) {
            return Err(ModelError::InvalidPitch { length, width });
        }
        Ok(Self {
            length,
            width,
            goal_center_home: Point2::new(0.0, width / 2.0),
            goal_center_away: Point2::new(length, width / 2.0),
        })
    }

    /// Point reflection through the pitch center.
    pub fn reflect(&self, p: Point2) -> Point2 {
        Point2::new(self.length - p.x, self.width - p.y)
    }

    /// Whether `p` lies within the pitch rectangle grown by `margin` meters.
    pub fn contains(&self, p: Point2, margin: f64) -> bool {
        p.x >= -margin
            && p.x <= self.length + margin
            && p.y >= -margin
            && p.y <= self.width + margin
    }

    /// Goal attacked by a team playing towards `+x` in normalized coordinates.
    pub fn attacked_goal(&self) -> Point2 {
        self.goal_center_away
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Period {
    First,
    Second,
    ExtraFirst,
    ExtraSecond,
}

impl Period {
    pub const ALL: [Period; 4] = [
        Period::First,
        Period::Second,
        Period::ExtraFirst,
        Period::ExtraSecond,
    ];

    pub fn number(self) -> u8 {
        match self {
            Period::First => 1,
            Period::Second => 2,
            Period::ExtraFirst => 3,
            Period::ExtraSecond => 4,
        }
    }

    /// Match-clock minute at which this period kicks off.
    pub fn start_minute(self) -> u32 {
        match self {
            Period::First => 0,
            Period::Second => 45,
            Period::ExtraFirst => 90,
            Period::ExtraSecond => 105,
        }
    }

    /// Teams swap ends every period.
    pub fn flips_direction(self) -> bool {
        matches!(self, Period::Second | Period::ExtraSecond)
    }
}

impl TryFrom<u8> for Period {
    type Error = ModelError;
    fn try_from(n: u8) -> Result<Self, ModelError> {
        match n {
            1 => Ok(Period::First),
            2 => Ok(Period::Second),
            3 => Ok(Period::ExtraFirst),
            4 => Ok(Period::ExtraSecond),
            other => Err(ModelError::UnknownPeriod(other)),
        }
    }
}

impl From<Period> for u8 {
    fn from(p: Period) -> u8 {
        p.number()
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Direction {
    PositiveX,
    NegativeX,
}

impl Direction {
    pub fn flipped(self) -> Direction {
        match self {
            Direction::PositiveX => Direction::NegativeX,
            Direction::NegativeX => Direction::PositiveX,
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            Direction::PositiveX => 1.0,
            Direction::NegativeX => -1.0,
        }
    }
}

impl TryFrom<i8> for Direction {
    type Error = String;
    fn try_from(v: i8) -> Result<Self, String> {
        match v {
            1 => Ok(Direction::PositiveX),
            -1 => Ok(Direction::NegativeX),
            other => Err(format!("direction must be 1 or -1, got {other}")),
        }
    }
}

impl From<Direction> for i8 {
    fn from(d: Direction) -> i8 {
        match d {
            Direction::PositiveX => 1,
            Direction::NegativeX => -1,
        }
    }
}

/// Attacking direction of each team for one period. Shared between all the
/// frames of that period.
pub type DirectionMap = Arc<BTreeMap<TeamId, Direction>>;

#[derive(Debug, Clone, PartialEq)]
pub struct PlayerPosition {
    pub player_id: PlayerId,
    pub team_id: TeamId,
    pub xy: Point2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub t_ms: i64,
    pub period: Period,
    pub ball: Point2,
    pub in_play: Option<bool>,
    pub players: Vec<PlayerPosition>,
    pub attacking_direction: DirectionMap,
}

impl Frame {
    pub fn player(&self, id: &PlayerId) -> Option<&PlayerPosition> {
        self.players.iter().find(|p| &p.player_id == id)
    }

    pub fn team_players<'a>(&'a self, team: &'a TeamId) -> impl Iterator<Item = &'a PlayerPosition> {
        self.players.iter().filter(move |p| &p.team_id == team)
    }

    pub fn direction_of(&self, team: &TeamId) -> Result<Direction, ModelError> {
        self.attacking_direction
            .get(team)
            .copied()
            .ok_or_else(|| ModelError::MissingDirection(team.clone()))
    }

    /// The ball is treated as live unless the frame says otherwise.
    pub fn is_in_play(&self) -> bool {
        self.in_play.unwrap_or(true)
    }
}

/// Returns `frame` viewed so that `team` attacks towards `+x`.
///
/// Flipping maps `(x, y)` to `(L - x, W - y)` for the ball and every player and
/// swaps both teams' recorded directions, so applying it twice is the same
/// as applying it once.
pub fn normalize_direction(frame: &Frame, team: &TeamId, pitch: &PitchSpec) -> Result<Frame, ModelError> {
    let dir = frame
        .attacking_direction
        .get(team)
        .copied()
        .ok_or_else(|| ModelError::UnknownTeam(team.clone()))?;
    if dir == Direction::PositiveX {
        return Ok(frame.clone());
    }
    let directions: BTreeMap<TeamId, Direction> = frame
        .attacking_direction
        .iter()
        .map(|(t, d)| (t.clone(), d.flipped()))
        .collect();
    Ok(Frame {
        t_ms: frame.t_ms,
        period: frame.period,
        ball: pitch.reflect(frame.ball),
        in_play: frame.in_play,
        players: frame
            .players
            .iter()
            .map(|p| PlayerPosition {
                player_id: p.player_id.clone(),
                team_id: p.team_id.clone(),
                xy: pitch.reflect(p.xy),
            })
            .collect(),
        attacking_direction: Arc::new(directions),
    })
}

/// Maps a single point into the frame where a team attacking `dir` plays
/// towards `+x`.
pub fn normalize_point(p: Point2, dir: Direction, pitch: &PitchSpec) -> Point2 {
    match dir {
        Direction::PositiveX => p,
        Direction::NegativeX => pitch.reflect(p),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Pass,
    Reception,
    Carry,
    Shot,
    Cross,
    Dribble,
    Recovery,
    Foul,
    Offside,
    BallOut,
    Corner,
    FreeKick,
    ThrowIn,
    GoalKick,
    Kickoff,
    Substitution,
}

impl EventKind {
    /// Events in which the acting player has the ball at their feet.
    pub fn is_on_ball(self) -> bool {
        matches!(
            self,
            EventKind::Pass
                | EventKind::Reception
                | EventKind::Carry
                | EventKind::Shot
                | EventKind::Cross
                | EventKind::Dribble
                | EventKind::Recovery
        )
    }

    /// Events that stop play until a restart.
    pub fn is_stoppage(self) -> bool {
        matches!(self, EventKind::BallOut | EventKind::Foul | EventKind::Offside)
    }

    pub fn is_restart(self) -> bool {
        matches!(
            self,
            EventKind::Corner
                | EventKind::FreeKick
                | EventKind::ThrowIn
                | EventKind::GoalKick
                | EventKind::Kickoff
        )
    }

    pub fn is_set_piece(self) -> bool {
        matches!(self, EventKind::Corner | EventKind::FreeKick | EventKind::ThrowIn)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t_ms: i64,
    #[serde(default = "default_period")]
    pub period: Period,
    #[serde(rename = "type")]
    pub kind: EventKind,
    pub team_id: TeamId,
    pub player_id: PlayerId,
    pub location: Point2,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end_location: Option<Point2>,
}

fn default_period() -> Period {
    Period::First
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RosterEntry {
    pub id: PlayerId,
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub goalkeeper: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeamMeta {
    pub id: TeamId,
    #[serde(default)]
    pub name: String,
    pub players: Vec<RosterEntry>,
    /// Attacking direction during the first period.
    pub kickoff_direction: Direction,
    /// Expected goals for this team, if an external model supplied it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xg: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchMeta {
    pub match_id: String,
    #[serde(default)]
    pub pitch: PitchSpec,
    pub home: TeamMeta,
    pub away: TeamMeta,
}

impl MatchMeta {
    pub fn teams(&self) -> [&TeamMeta; 2] {
        [&self.home, &self.away]
    }

    pub fn team(&self, id: &TeamId) -> Option<&TeamMeta> {
        self.teams().into_iter().find(|t| &t.id == id)
    }

    pub fn opponent(&self, id: &TeamId) -> Option<&TeamId> {
        if &self.home.id == id {
            Some(&self.away.id)
        } else if &self.away.id == id {
            Some(&self.home.id)
        } else {
            None
        }
    }

    pub fn is_goalkeeper(&self, player: &PlayerId) -> bool {
        self.teams()
            .iter()
            .flat_map(|t| t.players.iter())
            .any(|p| &p.id == player && p.goalkeeper)
    }

    pub fn goalkeepers(&self) -> std::collections::BTreeSet<PlayerId> {
        self.teams()
            .iter()
            .flat_map(|t| t.players.iter())
            .filter(|p| p.goalkeeper)
            .map(|p| p.id.clone())
            .collect()
    }

    pub fn team_of(&self, player: &PlayerId) -> Option<&TeamId> {
        self.teams()
            .into_iter()
            .find(|t| t.players.iter().any(|p| &p.id == player))
            .map(|t| &t.id)
    }

    pub fn directions(&self, period: Period) -> DirectionMap {
        let flip = period.flips_direction();
        let map = self
            .teams()
            .iter()
            .map(|t| {
                let d = if flip {
                    t.kickoff_direction.flipped()
                } else {
                    t.kickoff_direction
                };
                (t.id.clone(), d)
            })
            .collect();
        Arc::new(map)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpeedCategory {
    Walking,
    Jogging,
    Running,
    Sprinting,
}

impl SpeedCategory {
    pub const ALL: [SpeedCategory; 4] = [
        SpeedCategory::Walking,
        SpeedCategory::Jogging,
        SpeedCategory::Running,
        SpeedCategory::Sprinting,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            SpeedCategory::Walking => "walking",
            SpeedCategory::Jogging => "jogging",
            SpeedCategory::Running => "running",
            SpeedCategory::Sprinting => "sprinting",
        }
    }
}

/// Lower bounds (km/h) of the jogging, running and sprinting categories.
/// A speed equal to a bound belongs to the faster category.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct SpeedThresholds {
    bounds: [f64; 3],
}

impl Default for SpeedThresholds {
    fn default() -> Self {
        Self {
            bounds: [6.0, 14.0, 21.0],
        }
    }
}

impl TryFrom<[f64; 3]> for SpeedThresholds {
    type Error = ModelError;
    fn try_from(b: [f64; 3]) -> Result<Self, ModelError> {
        Self::new(b)
    }
}

impl From<SpeedThresholds> for [f64; 3] {
    fn from(t: SpeedThresholds) -> Self {
        t.bounds
    }
}

impl SpeedThresholds {
    pub fn new(bounds: [f64; 3]) -> Result<Self, ModelError> {
        if bounds[0] > 0.0 && bounds[0] < bounds[1] && bounds[1] < bounds[2] && bounds[2].is_finite() {
            Ok(Self { bounds })
        } else {
            Err(ModelError::InvalidThresholds(bounds))
        }
    }

    /// Speed (km/h) at or above which an effort counts as high intensity.
    pub fn high_intensity(&self) -> f64 {
        self.bounds[2]
    }

    pub fn bounds(&self) -> [f64; 3] {
        self.bounds
    }

    pub fn categorize(&self, kmh: f64) -> Result<SpeedCategory, ModelError> {
        if kmh < 0.0 || kmh.is_nan() {
            return Err(ModelError::NegativeSpeed(kmh));
        }
        Ok(self.bin(kmh))
    }

    /// Category for a speed already known to be non-negative.
    pub(crate) fn bin(&self, kmh: f64) -> SpeedCategory {
        if kmh >= self.bounds[2] {
            SpeedCategory::Sprinting
        } else if kmh >= self.bounds[1] {
            SpeedCategory::Running
        } else if kmh >= self.bounds[0] {
            SpeedCategory::Jogging
        } else {
            SpeedCategory::Walking
        }
    }
}

/// Categorizes a speed with the default 6 / 14 / 21 km/h boundaries.
pub fn speed_category(kmh: f64) -> Result<SpeedCategory, ModelError> {
    SpeedThresholds::default().categorize(kmh)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    CentralDefender,
    FullBack,
    DefensiveMidfielder,
    Midfielder,
    Winger,
    Striker,
    Goalkeeper,
}

impl Role {
    pub const ALL: [Role; 7] = [
        Role::CentralDefender,
        Role::FullBack,
        Role::DefensiveMidfielder,
        Role::Midfielder,
        Role::Winger,
        Role::Striker,
        Role::Goalkeeper,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Role::CentralDefender => "central_defender",
            Role::FullBack => "full_back",
            Role::DefensiveMidfielder => "defensive_midfielder",
            Role::Midfielder => "midfielder",
            Role::Winger => "winger",
            Role::Striker => "striker",
            Role::Goalkeeper => "goalkeeper",
        }
    }

    pub fn parse(s: &str) -> Option<Role> {
        let key = s.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        Role::ALL.into_iter().find(|r| r.name() == key)
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
