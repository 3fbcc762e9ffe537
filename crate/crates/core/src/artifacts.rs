//! Per-match results persisted by the pipeline and consumed by aggregation.

use serde::{Deserialize, Serialize};

use crate::formations::RoleTimeline;
use crate::kinematics::RunEffort;
use crate::model::{Period, PlayerId, Role, SpeedCategory, TeamId};
use crate::possession::{AttackType, DefenseType, PossessionSegment};
use crate::tactical::{MovementType, Unclassified};
use crate::valuation::RunValueSample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseKind {
    InPossession,
    OutOfPossession,
    OutOfPlay,
}

impl PhaseKind {
    pub fn name(self) -> &'static str {
        match self {
            PhaseKind::InPossession => "in_possession",
            PhaseKind::OutOfPossession => "out_of_possession",
            PhaseKind::OutOfPlay => "out_of_play",
        }
    }
}

/// A run with its context at the moment the starting valley ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub team_id: TeamId,
    #[serde(flatten)]
    pub run: RunEffort,
    pub phase: PhaseKind,
    pub role: Option<Role>,
    pub attack_type: Option<AttackType>,
    pub defense_type: Option<DefenseType>,
    /// Set for HI runs in possession that received a movement type.
    pub movement: Option<MovementType>,
    /// Set for HI runs in possession that could not be typed.
    pub unclassified: Option<Unclassified>,
    /// The run overlaps one of the player's own on-ball action windows.
    pub onball: bool,
}

/// From a reception (or recovery) to the player's last action in that
/// ball control.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnBallAction {
    pub player_id: PlayerId,
    pub team_id: TeamId,
    pub role: Option<Role>,
    pub period: Period,
    pub t_start: i64,
    pub t_end: i64,
    /// Highest smoothed speed inside the window.
    pub speed_kmh: Option<f64>,
    pub category: Option<SpeedCategory>,
    pub epv_added: Option<f64>,
}

/// Player speed two seconds before a reception.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReceptionSample {
    pub player_id: PlayerId,
    pub team_id: TeamId,
    pub role: Option<Role>,
    pub period: Period,
    pub t_ms: i64,
    pub speed_kmh: f64,
    pub category: SpeedCategory,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ActionsArtifact {
    pub actions: Vec<OnBallAction>,
    pub receptions: Vec<ReceptionSample>,
}

/// Time split of one team in one match. Durations are integer milliseconds
/// so that `in + out + out_of_play = duration` holds exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeamLedger {
    pub team_id: TeamId,
    pub opponent_id: TeamId,
    pub in_possession_ms: i64,
    pub out_of_possession_ms: i64,
    pub out_of_play_ms: i64,
    pub direct_play_ms: i64,
    /// Time defending in a high-pressure block.
    pub high_press_ms: i64,
    pub distance_in_m: f64,
    pub distance_out_m: f64,
    pub hi_distance_in_m: f64,
    pub hi_distance_out_m: f64,
    pub xg: Option<f64>,
    pub opponent_xg: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerLedgerRow {
    pub player_id: PlayerId,
    pub team_id: TeamId,
    pub role: Option<Role>,
    pub in_possession_ms: i64,
    pub out_of_possession_ms: i64,
    pub out_of_play_ms: i64,
    pub distance_in_m: f64,
    pub distance_out_m: f64,
    pub hi_distance_in_m: f64,
    pub hi_distance_out_m: f64,
}

impl PlayerLedgerRow {
    pub fn total_ms(&self) -> i64 {
        self.in_possession_ms + self.out_of_possession_ms + self.out_of_play_ms
    }
}

/// Defensive running of one team in one match minute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinuteRow {
    pub team_id: TeamId,
    pub minute: u32,
    pub out_of_possession_ms: i64,
    pub distance_m: f64,
    pub hi_distance_m: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MatchLedger {
    pub duration_ms: i64,
    pub teams: Vec<TeamLedger>,
    pub players: Vec<PlayerLedgerRow>,
    pub minutes: Vec<MinuteRow>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MatchArtifacts {
    pub match_id: String,
    pub runs: Vec<RunRecord>,
    pub segments: Vec<PossessionSegment>,
    pub roles: RoleTimeline,
    pub samples: Vec<RunValueSample>,
    pub actions: ActionsArtifact,
    pub ledger: MatchLedger,
}
