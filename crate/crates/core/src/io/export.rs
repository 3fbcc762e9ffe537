//! Named analysis tables over a season built from the store.
//!
//! Column names come from flattening the same serialized structs the
//! service returns, so a CSV column and a JSON field always share a name.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

use crate::aggregation::team::STYLE_COLUMNS;
use crate::aggregation::{
    compare_lineups, flatten_json, player_profile, style_pca, team_style, LineupEntry, LineupError, MinuteCurvePoint,
    PcaError, PlayerPartial, PlayerProfile, RosterRow, Season, TeamPartial, TeamStyle,
};
use crate::model::{PlayerId, Role, SpeedCategory, TeamId};
use crate::tactical::MovementType;

/// Every analysis name accepted by [`export`].
pub const ANALYSES: [&str; 15] = [
    "fig5",
    "fig6",
    "fig7",
    "fig8",
    "fig9",
    "fig10",
    "fig11",
    "fig12",
    "fig13",
    "fig14",
    "fig15",
    "fig16",
    "profiles",
    "team_style",
    "roster",
];

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("unknown analysis {name}; valid names: {}", ANALYSES.join(", "))]
    UnknownAnalysis { name: String },
    #[error("{0} needs two lineups")]
    MissingLineups(String),
    #[error(transparent)]
    Lineup(#[from] LineupError),
    #[error("pca: {0}")]
    Pca(#[from] PcaError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Filters {
    pub player: Option<PlayerId>,
    pub role: Option<Role>,
    pub team: Option<TeamId>,
    /// Lineups A and B for `fig12`.
    pub lineups: Option<(Vec<LineupEntry>, Vec<LineupEntry>)>,
}

impl Filters {
    fn keeps_profile(&self, p: &PlayerProfile) -> bool {
        self.player.as_ref().is_none_or(|x| x == &p.player_id)
            && self.role.is_none_or(|r| r == p.role)
            && self.team.as_ref().is_none_or(|t| p.teams.contains(t))
    }

    fn keeps_team(&self, t: &TeamStyle) -> bool {
        self.team.as_ref().is_none_or(|x| x == &t.team_id)
    }
}

/// Column names plus rows of JSON scalars.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

/// CSV cell text: empty for null, the JSON number text for numbers (which
/// parses back to the same `f64`), the raw string for strings.
pub fn cell_text(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

impl Table {
    fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn from_records(columns: Vec<String>, records: &[Vec<(String, Value)>]) -> Self {
        let rows = records
            .iter()
            .map(|rec| {
                let map: BTreeMap<&str, &Value> = rec.iter().map(|(k, v)| (k.as_str(), v)).collect();
                columns.iter().map(|c| map.get(c.as_str()).map_or(Value::Null, |v| (*v).clone())).collect()
            })
            .collect();
        Self { columns, rows }
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), ExportError> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.columns)?;
        for row in &self.rows {
            out.write_record(row.iter().map(cell_text))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    /// Array of objects keyed by column name.
    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    Value::Object(self.columns.iter().cloned().zip(row.iter().cloned()).collect::<serde_json::Map<_, _>>())
                })
                .collect(),
        )
    }
}

fn flat<T: Serialize>(x: &T) -> Vec<(String, Value)> {
    flatten_json(&serde_json::to_value(x).expect("record serializes"))
}

fn columns_of<T: Serialize>(template: &T) -> Vec<String> {
    flat(template).into_iter().map(|(k, _)| k).collect()
}

fn profile_template() -> PlayerProfile {
    player_profile(&PlayerId::new(""), Role::Winger, &PlayerPartial::default(), &Default::default())
}

fn team_template() -> TeamStyle {
    team_style(&TeamId::new(""), &TeamPartial::default(), &Default::default())
}

fn roster_template() -> RosterRow {
    RosterRow {
        player_id: PlayerId::new(""),
        role: Role::Winger,
        teams: Vec::new(),
        matches: 0,
        minutes_total: 0.0,
        qualified: false,
    }
}

fn minute_template() -> MinuteCurvePoint {
    MinuteCurvePoint {
        minute: 0,
        out_of_possession_s: 0.0,
        distance_per60: None,
        hi_distance_per60: None,
        distance_variation: None,
        hi_distance_variation: None,
        distance_variation_smoothed: None,
        hi_distance_variation_smoothed: None,
    }
}

/// Flattened full-profile table; the other player tables select from it.
pub fn profile_table(season: &Season, f: &Filters) -> Table {
    let recs: Vec<_> = season.profiles.iter().filter(|p| f.keeps_profile(p)).map(flat).collect();
    Table::from_records(columns_of(&profile_template()), &recs)
}

pub fn team_table(season: &Season, f: &Filters) -> Table {
    let recs: Vec<_> = season.teams.iter().filter(|t| f.keeps_team(t)).map(flat).collect();
    Table::from_records(columns_of(&team_template()), &recs)
}

fn select(t: &Table, columns: &[String]) -> Table {
    let idx: Vec<usize> = columns.iter().map(|c| t.column(c).unwrap_or_else(|| panic!("no column {c}"))).collect();
    Table {
        columns: columns.to_vec(),
        rows: t.rows.iter().map(|r| idx.iter().map(|&i| r[i].clone()).collect()).collect(),
    }
}

fn cols(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn per_category(prefix: &str) -> Vec<String> {
    SpeedCategory::ALL.iter().map(|c| format!("{prefix}_{}", c.name())).collect()
}

fn with_keys(mut head: Vec<String>, tail: Vec<String>) -> Vec<String> {
    head.extend(tail);
    head
}

fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

fn opt(x: Option<f64>) -> Value {
    x.map_or(Value::Null, num)
}

fn fig8(season: &Season, f: &Filters) -> Result<Table, ExportError> {
    let mut t = Table::new(&["kind", "name", "pc1", "pc2", "explained_ratio"]);
    let teams: Vec<&TeamStyle> = season.teams.iter().filter(|x| f.keeps_team(x) && x.enough_matches).collect();
    if teams.is_empty() {
        return Ok(t);
    }
    let columns = cols(&STYLE_COLUMNS);
    let rows: Vec<(String, Vec<Option<f64>>)> =
        teams.iter().map(|x| (x.team_id.to_string(), columns.iter().map(|c| x.metric(c)).collect())).collect();
    let pca = style_pca(&rows, &columns)?;
    let pc = |v: &[f64], k: usize| v.get(k).copied().map_or(Value::Null, num);
    for (k, r) in pca.explained_ratio.iter().enumerate() {
        t.rows.push(vec![
            "component".into(),
            format!("pc{}", k + 1).into(),
            Value::Null,
            Value::Null,
            num(*r),
        ]);
    }
    for (j, c) in columns.iter().enumerate() {
        let l: Vec<f64> = pca.loadings.iter().map(|comp| comp[j]).collect();
        t.rows.push(vec!["loading".into(), c.clone().into(), pc(&l, 0), pc(&l, 1), Value::Null]);
    }
    for (i, name) in pca.rows.iter().enumerate() {
        t.rows.push(vec!["score".into(), name.clone().into(), pc(&pca.scores[i], 0), pc(&pca.scores[i], 1), Value::Null]);
    }
    Ok(t)
}

fn fig11(season: &Season, f: &Filters) -> Table {
    let mut t = Table::new(&["player_id", "role", "movement_type", "per30", "percentile"]);
    for p in season.profiles.iter().filter(|p| f.keeps_profile(p)) {
        for m in MovementType::ALL {
            t.rows.push(vec![
                p.player_id.to_string().into(),
                p.role.name().into(),
                m.name().into(),
                opt(p.in_possession.movement_per30[&m]),
                opt(p.in_possession.movement_percentile[&m]),
            ]);
        }
    }
    t
}

fn fig12(season: &Season, f: &Filters) -> Result<Table, ExportError> {
    let (a, b) = f.lineups.as_ref().ok_or_else(|| ExportError::MissingLineups("fig12".into()))?;
    let cmp = compare_lineups(a, b, &season.profiles)?;
    let mut t = Table::new(&["movement_type", "lineup_a", "lineup_b", "delta"]);
    for m in MovementType::ALL {
        t.rows.push(vec![m.name().into(), num(cmp.a.per_type[&m]), num(cmp.b.per_type[&m]), num(cmp.delta[&m])]);
    }
    t.rows.push(vec!["total".into(), num(cmp.a.total), num(cmp.b.total), num(cmp.total_delta)]);
    Ok(t)
}

/// Builds one analysis table.
pub fn export(season: &Season, name: &str, f: &Filters) -> Result<Table, ExportError> {
    let id = cols(&["player_id", "role"]);
    let profiles = || profile_table(season, f);
    Ok(match name {
        "fig5" => select(
            &profiles(),
            &with_keys(
                id,
                cols(&["minutes_total", "in_possession_hi_distance_per30", "out_of_possession_hi_distance_per30"]),
            ),
        ),
        "fig6" => select(&team_table(season, f), &cols(&["team_id", "distance_in_per30", "distance_out_per30"])),
        "fig7" => select(
            &team_table(season, f),
            &cols(&["team_id", "hi_distance_in_per30", "hi_distance_out_per30", "possession_pct", "xg_diff"]),
        ),
        "fig8" => fig8(season, f)?,
        "fig9" => select(&profiles(), &with_keys(id, per_category("in_possession_action_share"))),
        "fig10" => select(
            &profiles(),
            &with_keys(
                id,
                cols(&[
                    "in_possession_hi_runs_per30",
                    "in_possession_hi_distance_per30",
                    "in_possession_onball_hi_share",
                    "in_possession_actions_per30_sprinting",
                ]),
            ),
        ),
        "fig11" => fig11(season, f),
        "fig12" => fig12(season, f)?,
        "fig13" => select(
            &profiles(),
            &with_keys(with_keys(id, cols(&["reception_count"])), per_category("reception_share")),
        ),
        "fig14" => select(&profiles(), &with_keys(id, per_category("in_possession_epv_added_per30"))),
        "fig15" => select(
            &profiles(),
            &with_keys(
                id,
                cols(&["influence_beta", "influence_std_error", "influence_samples", "hi_distance_per60"]),
            ),
        ),
        "fig16" => {
            let recs: Vec<_> = season.minute_curve.iter().map(flat).collect();
            Table::from_records(columns_of(&minute_template()), &recs)
        }
        "profiles" => profiles(),
        "team_style" => team_table(season, f),
        "roster" => {
            let recs: Vec<_> = season
                .roster
                .iter()
                .filter(|r| {
                    f.player.as_ref().is_none_or(|x| x == &r.player_id)
                        && f.role.is_none_or(|x| x == r.role)
                        && f.team.as_ref().is_none_or(|t| r.teams.contains(t))
                })
                .map(flat)
                .collect();
            Table::from_records(columns_of(&roster_template()), &recs)
        }
        other => {
            return Err(ExportError::UnknownAnalysis { name: other.to_string() });
        }
    })
}
