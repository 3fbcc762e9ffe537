//! Acceptance criteria 1 to 11, one PASS/FAIL line each. Every check runs
//! against an independent oracle or a scripted synthetic fixture.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use runlens_core::aggregation::{
    build_season, compare_lineups, lineup_aggregate, per30, player_profile, style_pca, AggregationConfig, LineupEntry,
    PhaseTime, PlayerPartial, PlayerProfile,
};
use runlens_core::config::EngineConfig;
use runlens_core::formations::{assign_formation, default_templates, min_cost_assignment, normalize_shape, raw_templates};
use runlens_core::io::{run_pipeline, write_match_dir, Store};
use runlens_core::kinematics::{compute_speed, segment_runs, KinematicsConfig, SpeedSample, SpeedSignal, TimedPoint};
use runlens_core::model::{Event, EventKind, Frame, Period, PlayerId, Point2, Role, SpeedCategory, SpeedThresholds, TeamId};
use runlens_core::pipeline::{analyze_match, MatchBundle};
use runlens_core::possession::{segment_possessions, PossessionSegment};
use runlens_core::synth::{full_match, generate, sprint_trace_script, FullMatchOptions, SyntheticMatch, TeamSpec};
use runlens_core::tactical::{build_block, fit_lines, MovementType};
use runlens_core::valuation::ols_qr;
use runlens_core::model::Direction;

type Outcome = Result<String, String>;

fn check(cond: bool, ok: String, fail: String) -> Outcome {
    if cond {
        Ok(ok)
    } else {
        Err(fail)
    }
}

fn bundle(m: &SyntheticMatch) -> MatchBundle {
    MatchBundle {
        meta: m.meta.clone(),
        frames: m.frames.clone(),
        events: m.events.clone(),
        epv: None,
    }
}

fn match_opts(seed: u64, id: &str) -> FullMatchOptions {
    FullMatchOptions::new(
        seed,
        id,
        TeamSpec::new("h", "4-4-2", Direction::PositiveX),
        TeamSpec::new("a", "4-3-3", Direction::NegativeX),
    )
}

// ---------------------------------------------------------------- 1

fn sprint_trace() -> Outcome {
    let script = sprint_trace_script();
    let m = generate(&script).map_err(|e| e.to_string())?;
    let winger = &script.runs[0].player;
    let track: Vec<TimedPoint> = m
        .frames
        .iter()
        .filter_map(|f| f.player(winger).map(|p| TimedPoint { t_ms: f.t_ms, xy: p.xy }))
        .collect();
    let xy: Vec<Point2> = track.iter().map(|p| p.xy).collect();
    let cfg = KinematicsConfig::default();
    let started = Instant::now();
    let signal = compute_speed(winger, Period::First, &track, &cfg).map_err(|e| e.to_string())?;
    let runs = segment_runs(&signal, &xy, &SpeedThresholds::default(), &cfg).map_err(|e| e.to_string())?;
    let elapsed = started.elapsed().as_secs_f64();

    if runs.len() != 3 {
        return Err(format!("{} runs detected, expected 3", runs.len()));
    }
    let truth: Vec<_> = m.truth.runs.iter().filter(|r| &r.player_id == winger).collect();
    let peaks: Vec<f64> = runs.iter().map(|r| r.peak_speed).collect();
    let peak_err = peaks.iter().zip([6.0, 21.0, 21.0]).map(|(p, e)| (p - e).abs()).fold(0.0, f64::max);
    let mut key_err = 0i64;
    let mut worst = String::new();
    for (r, t) in runs.iter().zip(&truth) {
        for (name, a, b) in [
            ("valley end", r.t_valley_end, t.t_valley_end),
            ("peak start", r.t_peak_start, t.t_peak_start),
            ("peak end", r.t_peak_end, t.t_peak_end),
            ("next valley start", r.t_next_valley_start, t.t_next_valley_start),
        ] {
            if (a - b).abs() > key_err {
                key_err = (a - b).abs();
                worst = format!("{name} {a} vs truth {b}");
            }
        }
    }
    let detail = format!(
        "peaks {:.2}/{:.2}/{:.2} km/h (max error {peak_err:.2}), max key-moment error {key_err} ms ({worst}), {:.1} ms",
        peaks[0],
        peaks[1],
        peaks[2],
        elapsed * 1e3
    );
    check(peak_err <= 0.5 && key_err <= 200 && elapsed < 0.1, detail.clone(), detail)
}

// ---------------------------------------------------------------- 2

fn hi_boundary() -> Outcome {
    let mut seen = Vec::new();
    for (peak, expect) in [(21.0, true), (20.9, false)] {
        let mut speeds = vec![3.0; 20];
        speeds.extend(vec![peak; 20]);
        speeds.extend(vec![3.0; 20]);
        let signal = SpeedSignal {
            player_id: PlayerId::new("p"),
            period: Period::First,
            samples: speeds
                .iter()
                .enumerate()
                .map(|(i, &v)| SpeedSample {
                    t_ms: i as i64 * 100,
                    raw_kmh: v,
                    smoothed_kmh: v,
                    valid: true,
                })
                .collect(),
        };
        let pos = vec![Point2::new(0.0, 0.0); speeds.len()];
        let runs = segment_runs(&signal, &pos, &SpeedThresholds::default(), &KinematicsConfig::default())
            .map_err(|e| e.to_string())?;
        if runs.len() != 1 || runs[0].is_hi != expect || runs[0].peak_speed != peak {
            return Err(format!("peak {peak}: {runs:?}"));
        }
        let cat = SpeedThresholds::default().categorize(peak).map_err(|e| e.to_string())?;
        if (cat == SpeedCategory::Sprinting) != expect {
            return Err(format!("peak {peak} categorized as {cat:?}"));
        }
        seen.push(format!("{peak} -> is_hi {}", runs[0].is_hi));
    }
    Ok(seen.join(", "))
}

// ---------------------------------------------------------------- 3

fn cross(o: Point2, a: Point2, b: Point2) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Jarvis march, counter-clockwise.
fn jarvis(points: &[Point2]) -> Vec<Point2> {
    let start = points.iter().copied().fold(points[0], |m, p| if (p.x, p.y) < (m.x, m.y) { p } else { m });
    let mut hull = vec![start];
    let mut current = start;
    loop {
        let mut next = if points[0] == current { points[1] } else { points[0] };
        for &p in points {
            let c = cross(current, next, p);
            if c < 0.0 || (c == 0.0 && (p - current).norm() > (next - current).norm()) {
                next = p;
            }
        }
        if next == start {
            return hull;
        }
        hull.push(next);
        current = next;
    }
}

fn half_plane_inside(hull: &[Point2], p: Point2) -> bool {
    (0..hull.len()).all(|i| cross(hull[i], hull[(i + 1) % hull.len()], p) >= 0.0)
}

/// Smallest SSE of three contiguous groups of the sorted values.
fn best_three_split(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let sse = |s: &[f64]| {
        let m = s.iter().sum::<f64>() / s.len() as f64;
        s.iter().map(|x| (x - m).powi(2)).sum::<f64>()
    };
    let n = v.len();
    let mut best = f64::INFINITY;
    for i in 1..n - 1 {
        for j in i + 1..n {
            best = best.min(sse(&v[..i]) + sse(&v[i..j]) + sse(&v[j..]));
        }
    }
    best
}

fn geometry() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut disagreements = 0;
    let mut tested = 0;
    for _ in 0..100 {
        let pts: Vec<Point2> =
            (0..10).map(|_| Point2::new(rng.random_range(20.0..80.0), rng.random_range(5.0..63.0))).collect();
        let block = build_block(&pts).map_err(|e| e.to_string())?;
        let hull = jarvis(&pts);
        for _ in 0..100 {
            let q = Point2::new(rng.random_range(0.0..105.0), rng.random_range(0.0..68.0));
            if block.contains(q) != half_plane_inside(&hull, q) {
                disagreements += 1;
            }
            tested += 1;
        }
    }
    let mut worst = 0.0f64;
    let mut fixtures = 0;
    for n in 3..=12 {
        for _ in 0..40 {
            let xs: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..60.0)).collect();
            let got = fit_lines(&xs).map_err(|e| e.to_string())?.sse(&xs);
            let best = best_three_split(&xs);
            worst = worst.max((got - best).abs() / best.max(1.0));
            fixtures += 1;
        }
    }
    let detail = format!(
        "{disagreements} hull disagreements in {tested} points; k-means vs exhaustive max relative SSE gap {worst:.1e} over {fixtures} fixtures"
    );
    check(disagreements == 0 && tested == 10_000 && worst < 1e-9, detail.clone(), detail)
}

// ---------------------------------------------------------------- 4

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

fn formation_assignment() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let perms = permutations(6);
    assert_eq!(perms.len(), 720);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let cost: Vec<Vec<f64>> = (0..6).map(|_| (0..6).map(|_| rng.random_range(0.0..10.0)).collect()).collect();
        let (_, got) = min_cost_assignment(&cost).ok_or("no assignment")?;
        let brute = perms
            .iter()
            .map(|p| p.iter().enumerate().map(|(i, &j)| cost[i][j]).sum::<f64>())
            .fold(f64::INFINITY, f64::min);
        worst = worst.max((got - brute).abs());
    }

    let raw = raw_templates();
    let library = default_templates();
    let noise = Normal::new(0.0, 2.0).unwrap();
    let ids: Vec<PlayerId> = (0..10).map(|i| PlayerId::new(format!("p{i}"))).collect();
    let mut recovered = 0;
    let mut misses: BTreeMap<String, usize> = BTreeMap::new();
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (name, slots) = &raw[seed as usize % raw.len()];
        let mut pts: Vec<Point2> = slots
            .iter()
            .map(|s| s.xy + Point2::new(noise.sample(&mut rng), noise.sample(&mut rng)))
            .collect();
        normalize_shape(&mut pts).map_err(|e| e.to_string())?;
        let rel: Vec<_> = ids.iter().cloned().zip(pts).collect();
        let m = assign_formation(&rel, &library).map_err(|e| e.to_string())?;
        if &m.name == name {
            recovered += 1;
        } else {
            *misses.entry(format!("{name}->{}", m.name)).or_default() += 1;
        }
    }
    let mut detail = format!(
        "assignment vs 720 permutations max cost gap {worst:.1e} on 200 fixtures; {recovered}/100 templates recovered at 2 m noise over {} templates",
        raw.len()
    );
    if !misses.is_empty() {
        detail.push_str(&format!(", misses {misses:?}"));
    }
    check(worst < 1e-9 && recovered >= 95, detail.clone(), detail)
}

// ---------------------------------------------------------------- 5

fn owner_timeline(segs: &[PossessionSegment]) -> Vec<(Option<String>, i64, i64)> {
    segs.iter().map(|s| (s.team_id.as_ref().map(|t| t.to_string()), s.t_start, s.t_end)).collect()
}

/// Owner timeline from the rule text: an opponent touch is a takeover when
/// the next event is by the same team or comes at least the regain window
/// later (or play ends that much later); otherwise it is an instant regain.
fn replay_oracle(seq: &[(usize, i64)], teams: &[String; 2], end: i64, window: i64) -> Vec<(Option<String>, i64, i64)> {
    let mut out = Vec::new();
    let (mut owner, mut start) = (0usize, 0i64);
    for (i, &(team, t)) in seq.iter().enumerate() {
        if team == owner {
            continue;
        }
        let takes_over = match seq.get(i + 1) {
            Some(&(next, next_t)) => next == team || next_t - t >= window,
            None => end - t >= window,
        };
        if takes_over {
            if t > start {
                out.push((Some(teams[owner].clone()), start, t));
            }
            owner = team;
            start = t;
        }
    }
    out.push((Some(teams[owner].clone()), start, end));
    out
}

fn possession_tiling() -> Outcome {
    let cfg = EngineConfig::default();
    let mut fixtures: Vec<SyntheticMatch> = vec![generate(&sprint_trace_script()).map_err(|e| e.to_string())?];
    for seed in [21, 22, 23] {
        let mut o = match_opts(seed, &format!("tiling{seed}"));
        o.half_ms = 10 * 60_000;
        fixtures.push(generate(&full_match(&o)).map_err(|e| e.to_string())?);
    }
    let mut tiled = 0;
    for m in &fixtures {
        let segs = segment_possessions(&m.events, &m.frames, &m.meta, &cfg.possession).map_err(|e| e.to_string())?;
        let total: i64 = segs.iter().map(|s| s.duration_ms()).sum();
        if total != m.truth.duration_ms {
            return Err(format!("{}: segments sum to {total} ms, match lasts {} ms", m.meta.match_id, m.truth.duration_ms));
        }
        let a = analyze_match(&bundle(m), &cfg).map_err(|e| e.to_string())?;
        let total: i64 = a.segments.iter().map(|s| s.duration_ms()).sum();
        if total != m.truth.duration_ms {
            return Err(format!("{}: pipeline segments sum to {total} ms", m.meta.match_id));
        }
        tiled += 1;
    }

    // Every sequence of up to six on-ball events over two teams and four
    // spacings around the regain window, with two tail lengths.
    let base = &fixtures[0];
    let teams = [base.meta.home.id.to_string(), base.meta.away.id.to_string()];
    let window = cfg.possession.regain_window_ms;
    let gaps = [500, window - 1, window, window + 1000];
    let frame0 = base.frames[0].clone();
    let ev = |t_ms: i64, kind: EventKind, team: usize| Event {
        t_ms,
        period: Period::First,
        kind,
        team_id: TeamId::new(&teams[team]),
        player_id: base.meta.teams()[team].players[5].id.clone(),
        location: Point2::new(52.5, 34.0),
        end_location: None,
    };
    let mut checked = 0usize;
    for len in 0..=6u32 {
        for code in 0..(2 * gaps.len()).pow(len) {
            let mut c = code;
            let mut seq = Vec::new();
            let mut t = 0;
            for _ in 0..len {
                let pick = c % (2 * gaps.len());
                c /= 2 * gaps.len();
                t += gaps[pick / 2];
                seq.push((pick % 2, t));
            }
            for tail in [1000, window] {
                let end = t + tail;
                let mut events = vec![ev(0, EventKind::Kickoff, 0)];
                events.extend(seq.iter().map(|&(team, t)| ev(t, EventKind::Pass, team)));
                let frames: Vec<Frame> =
                    vec![frame0.clone(), Frame { t_ms: end - cfg.possession.frame_step_ms, ..frame0.clone() }];
                let segs = segment_possessions(&events, &frames, &base.meta, &cfg.possession).map_err(|e| e.to_string())?;
                let expected = replay_oracle(&seq, &teams, end, window);
                if owner_timeline(&segs) != expected {
                    return Err(format!("sequence {seq:?} end {end}: {:?} vs oracle {expected:?}", owner_timeline(&segs)));
                }
                if segs.iter().map(|s| s.duration_ms()).sum::<i64>() != end {
                    return Err(format!("sequence {seq:?} does not tile"));
                }
                checked += 1;
            }
        }
    }
    Ok(format!("{tiled} fixtures tile to the millisecond; automaton equals replay oracle on {checked} event sequences"))
}

// ---------------------------------------------------------------- 6

fn design(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| vec![1.0, rng.random_range(-1.0..1.0), rng.random_range(0.0..2.0), rng.random_range(-3.0..3.0)])
        .collect()
}

fn regression() -> Outcome {
    let truth = [0.25, 0.8, -1.5, 0.05];
    let predict = |row: &[f64]| row.iter().zip(truth).map(|(x, b)| x * b).sum::<f64>();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let x = design(&mut rng, 400);
    let y: Vec<f64> = x.iter().map(|r| predict(r)).collect();
    let fit = ols_qr(&x, &y).map_err(|e| e.to_string())?;
    let rel = fit.beta.iter().zip(truth).map(|(b, t)| ((b - t) / t).abs()).fold(0.0, f64::max);

    let noise = Normal::new(0.0, 0.01).unwrap();
    let mut covered = 0;
    let mut worst_orth = 0.0f64;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let x = design(&mut rng, 5000);
        let y: Vec<f64> = x.iter().map(|r| predict(r) + noise.sample(&mut rng)).collect();
        let fit = ols_qr(&x, &y).map_err(|e| e.to_string())?;
        // The coefficient of interest is the run term, column 1.
        if (fit.beta[1] - truth[1]).abs() <= 3.0 * fit.std_errors[1] {
            covered += 1;
        }
        for j in 0..truth.len() {
            let xtr: f64 = x.iter().zip(&fit.residuals).map(|(row, r)| row[j] * r).sum();
            worst_orth = worst_orth.max(xtr.abs());
        }
    }
    let detail = format!(
        "zero-noise max relative error {rel:.1e}; truth within 3 SE in {covered}/100 seeds; max |X'r| {worst_orth:.1e}"
    );
    check(rel < 1e-9 && covered >= 99 && worst_orth < 1e-8, detail.clone(), detail)
}

// ---------------------------------------------------------------- 7

const MIN: i64 = 60_000;

fn partial(in_ms: i64, out_ms: i64) -> PlayerPartial {
    PlayerPartial {
        time: PhaseTime {
            in_possession_ms: in_ms,
            out_of_possession_ms: out_ms,
            out_of_play_ms: 0,
        },
        ..Default::default()
    }
}

fn normalization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let v = rng.random_range(0.0..500.0);
        let ms = rng.random_range(1..200 * MIN);
        let a = per30(v, ms).ok_or("per30 undefined")?;
        let b = per30(2.0 * v, 2 * ms).ok_or("per30 undefined")?;
        worst = worst.max((a - b).abs() / a.abs().max(1e-300));
    }
    let cfg = AggregationConfig::default();
    let id = PlayerId::new("p");
    let at_449 = player_profile(&id, Role::Midfielder, &partial(200 * MIN, 249 * MIN), &cfg);
    let at_450 = player_profile(&id, Role::Midfielder, &partial(200 * MIN, 250 * MIN), &cfg);
    let detail = format!(
        "per-30 doubling max relative change {worst:.1e}; 449 min qualified={}, 450 min qualified={}",
        at_449.qualified, at_450.qualified
    );
    check(worst <= 1e-12 && !at_449.qualified && at_450.qualified, detail.clone(), detail)
}

// ---------------------------------------------------------------- 8

fn pca() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let columns: Vec<String> = (0..5).map(|j| format!("c{j}")).collect();
    let rows: Vec<(String, Vec<Option<f64>>)> = (0..12)
        .map(|i| (format!("t{i}"), (0..5).map(|_| Some(rng.random_range(-10.0..10.0))).collect()))
        .collect();
    let r = style_pca(&rows, &columns).map_err(|e| e.to_string())?;
    let sum: f64 = r.explained_ratio.iter().sum();
    let mut recon = 0.0f64;
    for (i, z) in r.standardized.iter().enumerate() {
        for (j, zij) in z.iter().enumerate() {
            let back: f64 = (0..5).map(|k| r.scores[i][k] * r.loadings[k][j]).sum();
            recon = recon.max((back - zij).abs());
        }
    }
    let rank1: Vec<(String, Vec<Option<f64>>)> = (0..8)
        .map(|i| {
            let t = i as f64 * 1.7 - 3.0;
            (format!("t{i}"), vec![Some(2.0 * t + 1.0), Some(-0.5 * t + 4.0), Some(3.0 * t)])
        })
        .collect();
    let r1 = style_pca(&rank1, &columns[..3]).map_err(|e| e.to_string())?;
    let detail = format!(
        "ratios sum to 1{:+.1e}; reconstruction error {recon:.1e}; rank-1 first ratio {:.12}",
        sum - 1.0,
        r1.explained_ratio[0]
    );
    check(
        (sum - 1.0).abs() <= 1e-9 && recon < 1e-9 && (r1.explained_ratio[0] - 1.0).abs() <= 1e-9,
        detail.clone(),
        detail,
    )
}

// ---------------------------------------------------------------- 9

fn lineup_arithmetic() -> Outcome {
    // Eleven starters whose inside-to-back rates sum to 17.6, and a bench
    // player at 0.0 who replaces the 3.2 starter.
    let rates = [3.2, 2.4, 2.0, 1.8, 1.6, 1.5, 1.5, 1.4, 1.2, 1.0, 0.0, 0.0];
    let cfg = AggregationConfig::default();
    let mut profiles: Vec<PlayerProfile> = rates
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let mut p = player_profile(&PlayerId::new(format!("p{i:02}")), Role::Striker, &partial(300 * MIN, 300 * MIN), &cfg);
            for (m, f) in MovementType::ALL.into_iter().zip([0.5, 0.25, r, 0.0, 1.0, 0.125]) {
                p.in_possession.movement_per30.insert(m, Some(f));
            }
            p
        })
        .collect();
    profiles.sort_by(|a, b| (&a.player_id, a.role).cmp(&(&b.player_id, b.role)));
    let entry = |i: usize| LineupEntry {
        player_id: PlayerId::new(format!("p{i:02}")),
        role: Role::Striker,
    };
    let a: Vec<LineupEntry> = (0..11).map(entry).collect();
    let b: Vec<LineupEntry> = (1..12).map(entry).collect();
    let itb = MovementType::InsideToBack;
    let cmp = compare_lineups(&a, &b, &profiles).map_err(|e| e.to_string())?;
    let (before, after) = (cmp.a.per_type[&itb], cmp.b.per_type[&itb]);

    let direct_a: f64 = rates[..11].iter().sum();
    let identity = cmp.delta[&itb] == after - before && ((after - before) - (rates[11] - rates[0])).abs() < 1e-12;

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut invariant = true;
    let reference = lineup_aggregate(&a, &profiles).map_err(|e| e.to_string())?;
    for _ in 0..200 {
        let mut shuffled = a.clone();
        for i in (1..shuffled.len()).rev() {
            shuffled.swap(i, rng.random_range(0..=i));
        }
        invariant &= lineup_aggregate(&shuffled, &profiles).map_err(|e| e.to_string())? == reference;
    }
    let detail = format!(
        "inside-to-back {before:.1} -> {after:.1} (delta {:.1}); sum/diff identity {identity}; 200 shuffles identical {invariant}",
        cmp.delta[&itb]
    );
    check(
        (before - 17.6).abs() < 1e-12 && (after - 14.4).abs() < 1e-12 && (direct_a - before).abs() < 1e-12 && identity && invariant,
        detail.clone(),
        detail,
    )
}

// ---------------------------------------------------------------- 10

fn mean_over(points: &[(u32, f64)], lo: u32, hi: u32) -> f64 {
    let v: Vec<f64> = points.iter().filter(|(m, _)| (lo..=hi).contains(m)).map(|(_, x)| *x).collect();
    v.iter().sum::<f64>() / v.len().max(1) as f64
}

fn decay_curve() -> Outcome {
    let cfg = EngineConfig::default();
    let seeds: Vec<u64> = (31..37).collect();
    let artifacts: Vec<_> = std::thread::scope(|s| {
        let handles: Vec<_> = seeds
            .iter()
            .map(|&seed| {
                let cfg = &cfg;
                s.spawn(move || {
                    let mut o = match_opts(seed, &format!("decay{seed}"));
                    o.decay = Some((65, 0.8));
                    let m = generate(&full_match(&o)).map_err(|e| e.to_string())?;
                    analyze_match(&bundle(&m), cfg).map_err(|e| e.to_string())
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect::<Result<Vec<_>, _>>()
    })?;
    let season = build_season(&artifacts, &cfg.aggregation, cfg.valuation.min_cell_samples);
    let hi: Vec<(u32, f64)> =
        season.minute_curve.iter().filter_map(|p| p.hi_distance_variation_smoothed.map(|v| (p.minute, v))).collect();
    let dist: Vec<(u32, f64)> =
        season.minute_curve.iter().filter_map(|p| p.distance_variation_smoothed.map(|v| (p.minute, v))).collect();
    // Windows clear of the smoothing span around minute 65 and of the
    // first minutes of each half.
    let hi_drop = mean_over(&hi, 5, 62) - mean_over(&hi, 68, 89);
    let dist_drop = mean_over(&dist, 5, 62) - mean_over(&dist, 68, 89);
    let detail = format!(
        "{} matches: smoothed HI variation drops {:.1}% after minute 65, total distance {:.1}%",
        artifacts.len(),
        hi_drop * 100.0,
        dist_drop * 100.0
    );
    check(hi_drop >= 0.15 && dist_drop < hi_drop, detail.clone(), detail)
}

// ---------------------------------------------------------------- 11

fn peak_rss_mib() -> Option<f64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: f64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb / 1024.0)
}

fn store_hashes(root: &Path) -> Result<Vec<(String, String)>, String> {
    let store = Store::open(root).map_err(|e| e.to_string())?;
    Ok(store
        .manifest()
        .matches
        .iter()
        .flat_map(|(id, e)| e.artifacts.iter().map(move |(k, a)| (format!("{id}/{k}"), a.sha256.clone())))
        .collect())
}

fn performance() -> Outcome {
    let m = generate(&full_match(&match_opts(41, "perf"))).map_err(|e| e.to_string())?;
    let samples = m.frames.iter().map(|f| f.players.len() + 1).sum::<usize>();
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let dir: PathBuf = tmp.path().join("perf");
    write_match_dir(&dir, &m.meta, &m.frames, &m.events).map_err(|e| e.to_string())?;
    drop(m);
    let cfg = EngineConfig::default();
    let mut times = Vec::new();
    let mut hashes = Vec::new();
    for run in 0..2 {
        let root = tmp.path().join(format!("store{run}"));
        let mut store = Store::create(&root, &cfg).map_err(|e| e.to_string())?;
        let started = Instant::now();
        let out = run_pipeline(std::slice::from_ref(&dir), &cfg, &mut store, 1).map_err(|e| e.to_string())?;
        times.push(started.elapsed().as_secs_f64());
        if out.failed() > 0 {
            return Err(format!("pipeline failed: {:?}", out.outcomes[0].error));
        }
        hashes.push(store_hashes(&root)?);
    }
    let identical = hashes[0] == hashes[1] && !hashes[0].is_empty();
    let rss = peak_rss_mib();
    let detail = format!(
        "{:.2} M position samples; ingest+analysis+store {:.2} s / {:.2} s; peak RSS {}; repeated runs hash-identical {identical}",
        samples as f64 / 1e6,
        times[0],
        times[1],
        rss.map_or("unavailable".into(), |r| format!("{r:.0} MiB")),
    );
    let fast = times.iter().all(|t| *t < 10.0);
    check(fast && rss.is_some_and(|r| r < 1024.0) && identical, detail.clone(), detail)
}

fn main() {
    let criteria: [(u32, &str, fn() -> Outcome); 11] = [
        (11, "performance and determinism", performance),
        (1, "sprint trace segmentation", sprint_trace),
        (2, "HI boundary", hi_boundary),
        (3, "geometry oracles", geometry),
        (4, "formation assignment", formation_assignment),
        (5, "possession tiling", possession_tiling),
        (6, "influence regression", regression),
        (7, "normalization identities", normalization),
        (8, "PCA", pca),
        (9, "lineup arithmetic", lineup_arithmetic),
        (10, "late-match HI decay", decay_curve),
    ];
    // Performance runs first so its peak memory is not inflated by the
    // other fixtures.
    let mut results: Vec<(u32, &str, Outcome)> = criteria.iter().map(|(n, name, f)| (*n, *name, f())).collect();
    results.sort_by_key(|r| r.0);
    let mut failed = 0;
    for (n, name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("criterion {n:>2} PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n:>2} FAIL  {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
