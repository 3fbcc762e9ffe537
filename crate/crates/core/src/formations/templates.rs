//! Built-in template library. Coordinates are meters in the team's attacking
//! frame: `x` grows towards the opponent goal, `y` grows to the left.

use super::{FormationTemplate, Side, Slot, SlotRole};
use crate::model::Point2;

use SlotRole::*;

type RawSlot = (f64, f64, SlotRole);

fn side_of(y: f64) -> Side {
    if y > 1.0 {
        Side::L
    } else if y < -1.0 {
        Side::R
    } else {
        Side::C
    }
}

fn raw_slots(raw: &[RawSlot]) -> Vec<Slot> {
    raw.iter()
        .map(|&(x, y, role)| Slot {
            xy: Point2::new(x, y),
            role,
            side: side_of(y),
        })
        .collect()
}

fn build(name: &str, raw: &[RawSlot]) -> (String, Vec<Slot>) {
    (name.to_string(), raw_slots(raw))
}

/// Built-in templates in meters, before normalization.
pub fn raw_templates() -> Vec<(String, Vec<Slot>)> {
    raw_library()
}

pub fn default_templates() -> Vec<FormationTemplate> {
    raw_library()
        .into_iter()
        .map(|(name, slots)| FormationTemplate::new(&name, slots).expect("built-in templates are valid"))
        .collect()
}

const BACK_FOUR: [RawSlot; 4] = [(0.0, 24.0, FullBack), (0.0, 8.0, CentreBack), (0.0, -8.0, CentreBack), (0.0, -24.0, FullBack)];
const BACK_THREE: [RawSlot; 3] = [(0.0, 16.0, CentreBack), (0.0, 0.0, CentreBack), (0.0, -16.0, CentreBack)];
const BACK_FIVE: [RawSlot; 5] = [
    (4.0, 26.0, WingBack),
    (0.0, 12.0, CentreBack),
    (0.0, 0.0, CentreBack),
    (0.0, -12.0, CentreBack),
    (4.0, -26.0, WingBack),
];

fn join(parts: &[&[RawSlot]]) -> Vec<RawSlot> {
    parts.iter().flat_map(|p| p.iter().copied()).collect()
}

fn raw_library() -> Vec<(String, Vec<Slot>)> {
    vec![
        build(
            "4-4-2",
            &join(&[
                &BACK_FOUR,
                &[(15.0, 24.0, WideMid), (15.0, 8.0, CentralMid), (15.0, -8.0, CentralMid), (15.0, -24.0, WideMid)],
                &[(30.0, 7.0, Striker), (30.0, -7.0, Striker)],
            ]),
        ),
        build(
            "4-3-3",
            &join(&[
                &BACK_FOUR,
                &[(15.0, 14.0, CentralMid), (10.0, 0.0, DefensiveMid), (15.0, -14.0, CentralMid)],
                &[(28.0, 22.0, Winger), (31.0, 0.0, Striker), (28.0, -22.0, Winger)],
            ]),
        ),
        build(
            "4-2-3-1",
            &join(&[
                &BACK_FOUR,
                &[(10.0, 9.0, DefensiveMid), (10.0, -9.0, DefensiveMid)],
                &[(21.0, 22.0, Winger), (20.0, 0.0, AttackingMid), (21.0, -22.0, Winger)],
                &[(32.0, 0.0, Striker)],
            ]),
        ),
        build(
            "4-1-4-1",
            &join(&[
                &BACK_FOUR,
                &[(9.0, 0.0, DefensiveMid)],
                &[(18.0, 24.0, WideMid), (18.0, 8.0, CentralMid), (18.0, -8.0, CentralMid), (18.0, -24.0, WideMid)],
                &[(32.0, 0.0, Striker)],
            ]),
        ),
        build(
            "3-4-2-1",
            &join(&[
                &BACK_THREE,
                &[(14.0, 26.0, WingBack), (14.0, 8.0, CentralMid), (14.0, -8.0, CentralMid), (14.0, -26.0, WingBack)],
                &[(24.0, 10.0, AttackingMid), (24.0, -10.0, AttackingMid)],
                &[(33.0, 0.0, Striker)],
            ]),
        ),
        build(
            "3-5-2",
            &join(&[
                &BACK_THREE,
                &[(14.0, 27.0, WingBack), (10.0, 0.0, DefensiveMid), (16.0, 12.0, CentralMid), (16.0, -12.0, CentralMid), (14.0, -27.0, WingBack)],
                &[(30.0, 7.0, Striker), (30.0, -7.0, Striker)],
            ]),
        ),
        build(
            "3-4-3",
            &join(&[
                &BACK_THREE,
                &[(14.0, 26.0, WingBack), (14.0, 8.0, CentralMid), (14.0, -8.0, CentralMid), (14.0, -26.0, WingBack)],
                &[(30.0, 22.0, Winger), (31.0, 0.0, Striker), (30.0, -22.0, Winger)],
            ]),
        ),
        build(
            "5-3-2",
            &join(&[
                &BACK_FIVE,
                &[(16.0, 14.0, CentralMid), (14.0, 0.0, CentralMid), (16.0, -14.0, CentralMid)],
                &[(30.0, 7.0, Striker), (30.0, -7.0, Striker)],
            ]),
        ),
        build(
            "5-4-1",
            &join(&[
                &BACK_FIVE,
                &[(16.0, 24.0, WideMid), (16.0, 8.0, CentralMid), (16.0, -8.0, CentralMid), (16.0, -24.0, WideMid)],
                &[(30.0, 0.0, Striker)],
            ]),
        ),
    ]
}
