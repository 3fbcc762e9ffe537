//! Team movement-type totals of a hypothetical lineup.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::PlayerProfile;
use crate::model::{PlayerId, Role};
use crate::tactical::MovementType;

pub const LINEUP_SIZE: usize = 11;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LineupEntry {
    pub player_id: PlayerId,
    pub role: Role,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineupGap {
    /// `a` or `b` in a comparison, empty for a single lineup.
    pub lineup: String,
    pub player_id: PlayerId,
    pub role: Role,
    /// `no_qualifying_profile`, `no_possession_time` or `duplicate_player`.
    pub reason: String,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LineupError {
    #[error("lineup {lineup} has {size} players, expected {expected}")]
    WrongSize { lineup: String, size: usize, expected: usize },
    #[error("invalid lineup: {}", gaps.iter().map(|g| format!("{}:{} ({})", g.player_id, g.role, g.reason)).collect::<Vec<_>>().join(", "))]
    Gaps { gaps: Vec<LineupGap> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineupTotals {
    /// Sum of per-30 in-possession frequencies, one entry per movement type.
    pub per_type: BTreeMap<MovementType, f64>,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineupComparison {
    pub a: LineupTotals,
    pub b: LineupTotals,
    /// `b - a` per movement type.
    pub delta: BTreeMap<MovementType, f64>,
    pub total_delta: f64,
}

/// Sum of a multiset of values that does not depend on their order.
fn ordered_sum(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v.into_iter().sum()
}

fn lookup<'a>(profiles: &'a [PlayerProfile], e: &LineupEntry) -> Option<&'a PlayerProfile> {
    profiles.iter().find(|p| p.player_id == e.player_id && p.role == e.role && p.qualified)
}

fn gaps(lineup: &[LineupEntry], profiles: &[PlayerProfile], tag: &str) -> Vec<LineupGap> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for e in lineup {
        let gap = |reason: &str| LineupGap {
            lineup: tag.to_string(),
            player_id: e.player_id.clone(),
            role: e.role,
            reason: reason.to_string(),
        };
        if !seen.insert(&e.player_id) {
            out.push(gap("duplicate_player"));
            continue;
        }
        match lookup(profiles, e) {
            None => out.push(gap("no_qualifying_profile")),
            Some(p) if p.in_possession.movement_per30.values().any(Option::is_none) => out.push(gap("no_possession_time")),
            Some(_) => {}
        }
    }
    out
}

fn totals(lineup: &[LineupEntry], profiles: &[PlayerProfile]) -> LineupTotals {
    let per_type: BTreeMap<MovementType, f64> = MovementType::ALL
        .into_iter()
        .map(|m| {
            let vals = lineup
                .iter()
                .filter_map(|e| lookup(profiles, e))
                .map(|p| p.in_possession.movement_per30[&m].unwrap_or(0.0))
                .collect();
            (m, ordered_sum(vals))
        })
        .collect();
    let total = ordered_sum(per_type.values().copied().collect());
    LineupTotals { per_type, total }
}

/// Per-type sums over any set of distinct (player, role) entries with
/// qualifying profiles.
pub fn lineup_aggregate(lineup: &[LineupEntry], profiles: &[PlayerProfile]) -> Result<LineupTotals, LineupError> {
    let gaps = gaps(lineup, profiles, "");
    if !gaps.is_empty() {
        return Err(LineupError::Gaps { gaps });
    }
    Ok(totals(lineup, profiles))
}

/// Totals of two eleven-player lineups and their difference `b - a`. All
/// gaps of both lineups are reported together.
pub fn compare_lineups(a: &[LineupEntry], b: &[LineupEntry], profiles: &[PlayerProfile]) -> Result<LineupComparison, LineupError> {
    for (tag, l) in [("a", a), ("b", b)] {
        if l.len() != LINEUP_SIZE {
            return Err(LineupError::WrongSize {
                lineup: tag.into(),
                size: l.len(),
                expected: LINEUP_SIZE,
            });
        }
    }
    let mut all = gaps(a, profiles, "a");
    all.extend(gaps(b, profiles, "b"));
    if !all.is_empty() {
        return Err(LineupError::Gaps { gaps: all });
    }
    let ta = totals(a, profiles);
    let tb = totals(b, profiles);
    let delta = MovementType::ALL.into_iter().map(|m| (m, tb.per_type[&m] - ta.per_type[&m])).collect();
    Ok(LineupComparison {
        total_delta: tb.total - ta.total,
        a: ta,
        b: tb,
        delta,
    })
}
