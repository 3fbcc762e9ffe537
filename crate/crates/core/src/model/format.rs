//! Open file formats: JSON Lines tracking, a JSON array of events and a JSON
//! match metadata document.
//!
//! One tracking line looks like
//! `{"t":0,"period":1,"ball":[52.5,34.0],"in_play":true,"players":[{"id":"h1","team":"h","xy":[30.0,20.0]}]}`.
//! Attacking directions are not part of the line; they come from the
//! metadata's kickoff directions and are attached while reading.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{DirectionMap, Event, Frame, MatchMeta, Period, PlayerId, PlayerPosition, Point2, TeamId};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("malformed json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Serialize, Deserialize)]
struct FrameRecord {
    t: i64,
    period: Period,
    ball: Point2,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    in_play: Option<bool>,
    players: Vec<PlayerRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PlayerRecord {
    id: PlayerId,
    team: TeamId,
    xy: Point2,
}

/// Serializes one frame as a single JSON line (without the trailing newline).
pub fn frame_to_line(frame: &Frame) -> String {
    let rec = FrameRecord {
        t: frame.t_ms,
        period: frame.period,
        ball: frame.ball,
        in_play: frame.in_play,
        players: frame
            .players
            .iter()
            .map(|p| PlayerRecord {
                id: p.player_id.clone(),
                team: p.team_id.clone(),
                xy: p.xy,
            })
            .collect(),
    };
    serde_json::to_string(&rec).expect("frame records always serialize")
}

pub fn write_tracking<W: Write>(mut w: W, frames: &[Frame]) -> Result<(), FormatError> {
    for f in frames {
        w.write_all(frame_to_line(f).as_bytes())?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Parses a JSON Lines tracking stream. Blank lines are skipped; any other
/// malformed line aborts with its 1-based line number.
pub fn read_tracking<R: BufRead>(r: R, meta: &MatchMeta) -> Result<Vec<Frame>, FormatError> {
    let mut directions: BTreeMap<Period, DirectionMap> = BTreeMap::new();
    let mut frames = Vec::new();
    for (idx, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: FrameRecord = serde_json::from_str(&line).map_err(|e| FormatError::Line {
            line: idx + 1,
            message: e.to_string(),
        })?;
        let dirs = directions
            .entry(rec.period)
            .or_insert_with(|| meta.directions(rec.period))
            .clone();
        frames.push(Frame {
            t_ms: rec.t,
            period: rec.period,
            ball: rec.ball,
            in_play: rec.in_play,
            players: rec
                .players
                .into_iter()
                .map(|p| PlayerPosition {
                    player_id: p.id,
                    team_id: p.team,
                    xy: p.xy,
                })
                .collect(),
            attacking_direction: dirs,
        });
    }
    Ok(frames)
}

pub fn write_events<W: Write>(w: W, events: &[Event]) -> Result<(), FormatError> {
    serde_json::to_writer_pretty(w, events)?;
    Ok(())
}

pub fn read_events<R: std::io::Read>(r: R) -> Result<Vec<Event>, FormatError> {
    Ok(serde_json::from_reader(r)?)
}

pub fn write_meta<W: Write>(w: W, meta: &MatchMeta) -> Result<(), FormatError> {
    serde_json::to_writer_pretty(w, meta)?;
    Ok(())
}

pub fn read_meta<R: std::io::Read>(r: R) -> Result<MatchMeta, FormatError> {
    Ok(serde_json::from_reader(r)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Direction, EventKind, PitchSpec, RosterEntry, TeamMeta};
    use proptest::prelude::*;

    fn meta() -> MatchMeta {
        let team = |id: &str, dir| TeamMeta {
            id: id.into(),
            name: String::new(),
            players: (1..=3)
                .map(|i| RosterEntry {
                    id: PlayerId::new(format!("{id}{i}")),
                    name: String::new(),
                    goalkeeper: i == 1,
                })
                .collect(),
            kickoff_direction: dir,
            xg: None,
        };
        MatchMeta {
            match_id: "m".into(),
            pitch: PitchSpec::default(),
            home: team("h", Direction::PositiveX),
            away: team("a", Direction::NegativeX),
        }
    }

    #[test]
    fn parses_documented_line() {
        let line = r#"{"t":100,"period":1,"ball":[52.5,34.0],"in_play":true,"players":[{"id":"h1","team":"h","xy":[30.0,20.0]}]}"#;
        let frames = read_tracking(line.as_bytes(), &meta()).unwrap();
        assert_eq!(frames.len(), 1);
        assert_eq!(frames[0].t_ms, 100);
        assert_eq!(frames[0].players[0].xy, Point2::new(30.0, 20.0));
        assert_eq!(frames[0].direction_of(&"a".into()).unwrap(), Direction::NegativeX);
        assert_eq!(frame_to_line(&frames[0]), line);
    }

    #[test]
    fn second_period_swaps_directions() {
        let line = r#"{"t":0,"period":2,"ball":[52.5,34.0],"players":[]}"#;
        let frames = read_tracking(line.as_bytes(), &meta()).unwrap();
        assert_eq!(frames[0].direction_of(&"h".into()).unwrap(), Direction::NegativeX);
    }

    #[test]
    fn bad_line_is_reported_with_number() {
        let text = "{\"t\":0,\"period\":1,\"ball\":[1,1],\"players\":[]}\n{\"t\":100,\"period\":1,\"ball\":[1,1]\n";
        match read_tracking(text.as_bytes(), &meta()) {
            Err(FormatError::Line { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn events_use_documented_field_names() {
        let ev = Event {
            t_ms: 1200,
            period: Period::First,
            kind: EventKind::ThrowIn,
            team_id: "h".into(),
            player_id: "h2".into(),
            location: Point2::new(40.0, 0.0),
            end_location: None,
        };
        let text = serde_json::to_string(&ev).unwrap();
        assert!(text.contains("\"type\":\"throw_in\""));
        assert!(text.contains("\"team_id\":\"h\""));
        let back: Event = serde_json::from_str(&text).unwrap();
        assert_eq!(back, ev);
    }

    fn arb_frames() -> impl Strategy<Value = Vec<Frame>> {
        let player = (0usize..6, -5.0f64..110.0, -5.0f64..73.0);
        let frame = (
            0i64..10_000_000,
            1u8..=2,
            (-5.0f64..110.0, -5.0f64..73.0),
            proptest::option::of(any::<bool>()),
            proptest::collection::vec(player, 0..6),
        );
        proptest::collection::vec(frame, 0..8).prop_map(|recs| {
            let m = meta();
            recs.into_iter()
                .map(|(t, p, (bx, by), in_play, players)| {
                    let period = Period::try_from(p).unwrap();
                    Frame {
                        t_ms: t,
                        period,
                        ball: Point2::new(bx, by),
                        in_play,
                        players: players
                            .into_iter()
                            .map(|(i, x, y)| PlayerPosition {
                                player_id: PlayerId::new(format!("p{i}")),
                                team_id: if i % 2 == 0 { "h".into() } else { "a".into() },
                                xy: Point2::new(x, y),
                            })
                            .collect(),
                        attacking_direction: m.directions(period),
                    }
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn tracking_round_trip_is_bit_exact(frames in arb_frames()) {
            let mut buf = Vec::new();
            write_tracking(&mut buf, &frames).unwrap();
            let back = read_tracking(buf.as_slice(), &meta()).unwrap();
            prop_assert_eq!(back.len(), frames.len());
            for (a, b) in frames.iter().zip(&back) {
                prop_assert_eq!(a.t_ms, b.t_ms);
                prop_assert_eq!(a.ball.x.to_bits(), b.ball.x.to_bits());
                prop_assert_eq!(a.ball.y.to_bits(), b.ball.y.to_bits());
                prop_assert_eq!(a, b);
            }
        }
    }
}
