//! Ready-made scripts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::oracle::hull_centroid;
use super::{generate, SynthError, MotionConfig, PeriodScript, PossessionEnd, PossessionScript, RunDirective, Script, TeamScript, STEP_MS};
use crate::formations::raw_templates;
use crate::model::{Direction, Period, PitchSpec, PlayerId, Point2, TeamId};
use crate::possession::{AttackType, DefenseType};

#[derive(Debug, Clone, PartialEq)]
pub struct TeamSpec {
    pub id: String,
    pub formation: String,
    pub kickoff_direction: Direction,
    pub xg: Option<f64>,
}

impl TeamSpec {
    pub fn new(id: &str, formation: &str, kickoff_direction: Direction) -> Self {
        Self {
            id: id.to_string(),
            formation: formation.to_string(),
            kickoff_direction,
            xg: None,
        }
    }

    /// `{id}_01` keeps goal, `{id}_02`..`{id}_11` follow the template order.
    pub fn player(&self, j: usize) -> PlayerId {
        PlayerId::new(format!("{}_{:02}", self.id, j))
    }

    fn script(&self) -> TeamScript {
        TeamScript {
            id: TeamId::new(&self.id),
            name: self.id.clone(),
            kickoff_direction: self.kickoff_direction,
            formation: self.formation.clone(),
            players: (1..=11).map(|j| self.player(j)).collect(),
            xg: self.xg,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FullMatchOptions {
    pub seed: u64,
    pub match_id: String,
    pub home: TeamSpec,
    pub away: TeamSpec,
    pub half_ms: i64,
    /// Mean runs per outfield player and minute.
    pub runs_per_minute: f64,
    /// Share of runs with a high-intensity cruise speed.
    pub hi_share: f64,
    /// From this match minute on, high-intensity holds are scaled by the
    /// factor.
    pub decay: Option<(u32, f64)>,
    pub counters: bool,
}

impl FullMatchOptions {
    pub fn new(seed: u64, match_id: &str, home: TeamSpec, away: TeamSpec) -> Self {
        Self {
            seed,
            match_id: match_id.to_string(),
            home,
            away,
            half_ms: 45 * 60_000,
            runs_per_minute: 0.8,
            hi_share: 0.35,
            decay: None,
            counters: true,
        }
    }
}

/// Offsets of the shape's area centroid and of its most advanced slot from
/// the mean depth.
fn shape_offsets(formation: &str) -> (f64, f64) {
    raw_templates()
        .into_iter()
        .find(|(n, _)| n == formation)
        .and_then(|(_, slots)| {
            let pts: Vec<Point2> = slots.iter().map(|s| s.xy).collect();
            let mean = pts.iter().map(|p| p.x).sum::<f64>() / pts.len() as f64;
            let front = pts.iter().map(|p| p.x).fold(f64::MIN, f64::max);
            hull_centroid(&pts).map(|c| (c.x - mean, front - mean))
        })
        .unwrap_or((0.0, 0.0))
}

fn grid(ms: f64) -> i64 {
    (ms / STEP_MS as f64).round() as i64 * STEP_MS
}

/// Two halves of alternating possessions with turnovers and stoppages,
/// every attack and defense style, and random runs for all outfield players.
///
/// Styles are planned from an approximate shape model; a possession the
/// generator finds infeasible is replayed as an organized attack.
pub fn full_match(opts: &FullMatchOptions) -> Script {
    let mut script = plan_match(opts);
    while let Err(SynthError::Infeasible { possession, .. }) = generate(&script) {
        script.possessions[possession].attack = AttackType::Organized;
    }
    script
}

fn plan_match(opts: &FullMatchOptions) -> Script {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let motion = MotionConfig::default();
    let teams = [&opts.home, &opts.away];
    let mut possessions: Vec<PossessionScript> = Vec::new();
    let mut runs: Vec<RunDirective> = Vec::new();
    let periods = [Period::First, Period::Second];
    let shapes = [shape_offsets(&opts.home.formation), shape_offsets(&opts.away.formation)];
    let offset = [shapes[0].0, shapes[1].0];
    let front = [shapes[0].1, shapes[1].1];

    for (pi, &period) in periods.iter().enumerate() {
        let d = opts.half_ms;
        // Shape depth of each team, tracked with the generator's motion rule.
        let mut depth = [motion.depth_in_possession, motion.depth_medium_block];
        let mut team = pi % 2;
        if team == 1 {
            depth.swap(0, 1);
        }
        let mut t = 0i64;
        let mut prev: Option<(usize, PossessionEnd, i64, DefenseType)> = None;
        let mut quiet: Vec<(i64, i64)> = Vec::new();
        while t < d {
            let mut len = grid(rng.random_range(8_000.0..40_000.0));
            let last = t + len + 8_000 > d;
            if last {
                len = d - t;
            }
            let defense = match rng.random_range(0..10) {
                0 | 1 => DefenseType::LowBlock,
                2 | 3 => DefenseType::HighPressure,
                _ => DefenseType::MediumBlock,
            };
            let end = if last {
                PossessionEnd::PeriodEnd
            } else if rng.random_bool(0.75) {
                PossessionEnd::Turnover
            } else if rng.random_bool(0.5) {
                PossessionEnd::BallOut
            } else {
                PossessionEnd::Foul
            };
            let other = 1 - team;
            let mut defense = defense;
            let after_turnover = matches!(prev, Some((_, PossessionEnd::Turnover, _, _)));
            let restart = prev.is_some() && !after_turnover;
            let attack = if after_turnover
                && opts.counters
                && len >= 14_000
                && (52.5 - 10.0..=52.5 - 3.0).contains(&(depth[team] + offset[team]))
                && (52.5 + 3.0..=52.5 + 9.0).contains(&(depth[other] + offset[other]))
                && motion.depth_in_possession + offset[team] >= 52.5 + 4.0
                && motion.defense_depth(match defense {
                    DefenseType::HighPressure => DefenseType::MediumBlock,
                    d => d,
                }) + offset[other]
                    <= 52.5 - 4.0
                && rng.random_bool(0.5)
            {
                AttackType::CounterAttack
            } else if restart && depth[team] <= 50.0 && rng.random_bool(0.25) {
                AttackType::DirectPlay
            } else if restart && depth[team] + front[team] >= 52.5 + 8.0 && rng.random_bool(0.3) {
                AttackType::SetPiece
            } else {
                AttackType::Organized
            };
            if attack == AttackType::CounterAttack {
                if defense == DefenseType::HighPressure {
                    defense = DefenseType::MediumBlock;
                }
                // Runs before a counter would still be rejoining the shape.
                quiet.push((t - 35_000, t + 12_000));
            }
            possessions.push(PossessionScript {
                team: TeamId::new(&teams[team].id),
                period,
                t_start: t,
                t_end: t + len,
                attack,
                defense,
                end,
            });
            let targets = [
                if team == 0 { motion.depth_in_possession } else { motion.defense_depth(defense) },
                if team == 1 { motion.depth_in_possession } else { motion.defense_depth(defense) },
            ];
            for (dpt, tg) in depth.iter_mut().zip(targets) {
                let step = motion.shape_speed * len as f64 / 1000.0;
                *dpt += (tg - *dpt).clamp(-step, step);
            }
            prev = Some((team, end, len, defense));
            t += len;
            match end {
                PossessionEnd::Turnover => team = other,
                PossessionEnd::BallOut | PossessionEnd::Foul => {
                    t += grid(rng.random_range(2_000.0..6_000.0));
                    if end == PossessionEnd::BallOut {
                        team = other;
                    }
                }
                PossessionEnd::PeriodEnd => {}
            }
        }

        // Runs.
        let minute0 = (pi as i64 * d) as f64 / 60_000.0;
        for spec in teams {
            for j in 2..=11 {
                let mut t = grid(rng.random_range(1_000.0..60_000.0));
                loop {
                    let hi = rng.random_bool(opts.hi_share);
                    let cruise = if hi {
                        rng.random_range(21.5..30.0)
                    } else if rng.random_bool(0.5) {
                        rng.random_range(7.0..13.6)
                    } else {
                        rng.random_range(14.4..20.6)
                    };
                    let mut hold = rng.random_range(600.0..2_500.0);
                    if let Some((from, factor)) = opts.decay {
                        if hi && minute0 + t as f64 / 60_000.0 >= from as f64 {
                            hold *= factor;
                        }
                    }
                    let hold = grid(hold.max(600.0));
                    let angle = rng.random_range(0.0..std::f64::consts::TAU);
                    let r = RunDirective {
                        player: spec.player(j),
                        period,
                        t_start: t,
                        heading: Point2::new(angle.cos(), angle.sin()),
                        cruise_kmh: cruise,
                        hold_ms: hold,
                    };
                    let v = cruise / 3.6;
                    let dur = grid((2.0 * v / motion.accel_ms2 + hold as f64 / 1000.0) * 1000.0 + 50.0);
                    if t + dur + 1_200 > d {
                        break;
                    }
                    let clash = quiet.iter().any(|&(a, b)| t <= b && a <= t + dur + 1_500);
                    if !clash {
                        runs.push(r);
                    }
                    let gap = -(1.0 - rng.random::<f64>()).ln() * 60_000.0 / opts.runs_per_minute;
                    t += dur + 1_600 + grid(gap);
                }
            }
        }
    }

    Script {
        seed: opts.seed,
        match_id: opts.match_id.clone(),
        pitch: PitchSpec::default(),
        periods: periods
            .iter()
            .map(|&period| PeriodScript {
                period,
                duration_ms: opts.half_ms,
            })
            .collect(),
        home: opts.home.script(),
        away: opts.away.script(),
        possessions,
        runs,
        passes: Vec::new(),
        exclude_receivers: Vec::new(),
        motion,
        dropout: 0.0,
        formation_noise_m: 0.0,
    }
}

/// One minute in which a winger makes a jog at 6.3 km/h and two sprints at
/// 21.3 km/h, separated by walking.
pub fn sprint_trace_script() -> Script {
    let home = TeamSpec::new("home", "4-3-3", Direction::PositiveX);
    let away = TeamSpec::new("away", "4-4-2", Direction::NegativeX);
    let winger = home.player(9);
    let run = |t_start: i64, cruise_kmh: f64| RunDirective {
        player: winger.clone(),
        period: Period::First,
        t_start,
        heading: Point2::new(0.0, -1.0),
        cruise_kmh,
        hold_ms: 1500,
    };
    Script {
        seed: 1,
        match_id: "sprint-trace".into(),
        pitch: PitchSpec::default(),
        periods: vec![PeriodScript {
            period: Period::First,
            duration_ms: 60_000,
        }],
        home: home.script(),
        away: away.script(),
        possessions: vec![PossessionScript {
            team: TeamId::new("home"),
            period: Period::First,
            t_start: 0,
            t_end: 60_000,
            attack: AttackType::Organized,
            defense: DefenseType::MediumBlock,
            end: PossessionEnd::PeriodEnd,
        }],
        runs: vec![run(5_000, 6.3), run(15_000, 21.3), run(40_000, 21.3)],
        passes: Vec::new(),
        exclude_receivers: vec![winger],
        motion: MotionConfig::default(),
        dropout: 0.0,
        formation_noise_m: 0.0,
    }
}
