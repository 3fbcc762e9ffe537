//! Geometry used to derive expected movement types for generated matches.
//! Kept separate from the tactical module so the two can check each other.

use crate::model::Point2;
use crate::tactical::MovementType;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpectedZone {
    Front,
    Back,
    Inside,
    Wing,
}

/// Convex hull by gift wrapping, counter-clockwise, collinear points dropped.
pub fn gift_wrap(points: &[Point2]) -> Vec<Point2> {
    if points.len() < 3 {
        return points.to_vec();
    }
    let start = (0..points.len())
        .min_by(|&a, &b| {
            points[a]
                .x
                .total_cmp(&points[b].x)
                .then(points[a].y.total_cmp(&points[b].y))
        })
        .unwrap();
    let mut hull = Vec::new();
    let mut cur = start;
    loop {
        hull.push(points[cur]);
        let mut next = (cur + 1) % points.len();
        for (i, &p) in points.iter().enumerate() {
            let a = points[cur];
            let b = points[next];
            let turn = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
            let farther = (p.x - a.x).hypot(p.y - a.y) > (b.x - a.x).hypot(b.y - a.y);
            if turn < -1e-12 || (turn.abs() <= 1e-12 && farther) {
                next = i;
            }
        }
        cur = next;
        if cur == start || hull.len() > points.len() {
            break;
        }
    }
    hull
}

/// Area centroid of the hull, from a triangle fan around its first vertex.
pub fn hull_centroid(points: &[Point2]) -> Option<Point2> {
    let hull = gift_wrap(points);
    let (mut area, mut cx, mut cy) = (0.0, 0.0, 0.0);
    for w in hull.windows(2).skip(1) {
        let (a, b, c) = (hull[0], w[0], w[1]);
        let t = ((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)) / 2.0;
        area += t;
        cx += t * (a.x + b.x + c.x) / 3.0;
        cy += t * (a.y + b.y + c.y) / 3.0;
    }
    (area.abs() > 1e-9).then(|| Point2::new(cx / area, cy / area))
}

fn segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p.x - a.x - t * dx).hypot(p.y - a.y - t * dy)
}

/// `Some(inside)` when `p` is at least `margin` away from the hull boundary.
pub fn hull_side(hull: &[Point2], p: Point2, margin: f64) -> Option<bool> {
    let n = hull.len();
    if n < 3 {
        return None;
    }
    let mut min_d = f64::INFINITY;
    let mut inside = true;
    for i in 0..n {
        let (a, b) = (hull[i], hull[(i + 1) % n]);
        min_d = min_d.min(segment_distance(p, a, b));
        if (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x) < 0.0 {
            inside = false;
        }
    }
    (min_d >= margin).then_some(inside)
}

/// Mean depths of the three lines minimizing the within-line sum of squares,
/// found by trying every split of the sorted depths. `None` if the best split
/// is not unique.
pub fn three_lines(xs: &[f64]) -> Option<[f64; 3]> {
    let n = xs.len();
    if n < 3 {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let stats = |a: usize, b: usize| {
        let m = v[a..b].iter().sum::<f64>() / (b - a) as f64;
        (m, v[a..b].iter().map(|x| (x - m).powi(2)).sum::<f64>())
    };
    let mut best: Option<(f64, [f64; 3])> = None;
    let mut runner_up = f64::INFINITY;
    for i in 1..n - 1 {
        for j in i + 1..n {
            let (m0, s0) = stats(0, i);
            let (m1, s1) = stats(i, j);
            let (m2, s2) = stats(j, n);
            let sse = s0 + s1 + s2;
            match best {
                Some((b, _)) if sse >= b => runner_up = runner_up.min(sse),
                _ => {
                    if let Some((b, _)) = best {
                        runner_up = runner_up.min(b);
                    }
                    best = Some((sse, [m0, m1, m2]));
                }
            }
        }
    }
    let (sse, lines) = best?;
    (runner_up - sse > 1e-6 * (1.0 + sse)).then_some(lines)
}

/// Zone of `p` against the defenders' optimal three lines and convex hull.
/// `None` if `p` is within `margin` of a line or of the hull boundary.
pub fn expected_zone(defenders: &[Point2], p: Point2, margin: f64) -> Option<ExpectedZone> {
    let xs: Vec<f64> = defenders.iter().map(|d| d.x).collect();
    let [first, _, last] = three_lines(&xs)?;
    if (p.x - last).abs() < margin || (p.x - first).abs() < margin {
        return None;
    }
    if p.x > last {
        return Some(ExpectedZone::Back);
    }
    if p.x < first {
        return Some(ExpectedZone::Front);
    }
    let hull = gift_wrap(defenders);
    hull_side(&hull, p, margin).map(|inside| if inside { ExpectedZone::Inside } else { ExpectedZone::Wing })
}

pub fn expected_movement(origin: ExpectedZone, destination: ExpectedZone) -> Option<MovementType> {
    use ExpectedZone::*;
    use MovementType::*;
    Some(match (origin, destination) {
        (Inside, Inside) => InsideToInside,
        (Inside, Wing) => InsideToWing,
        (Inside, Back) => InsideToBack,
        (Wing, Inside) => WingToInside,
        (Wing, Wing) => WingToWing,
        (Wing, Back) => WingToBack,
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centroid_of_triangle_and_square() {
        let tri = [Point2::new(0.0, 0.0), Point2::new(6.0, 0.0), Point2::new(0.0, 3.0)];
        let c = hull_centroid(&tri).unwrap();
        assert!((c.x - 2.0).abs() < 1e-12 && (c.y - 1.0).abs() < 1e-12);
        // An interior point does not move the area centroid.
        let sq = [
            Point2::new(0.0, 0.0),
            Point2::new(4.0, 0.0),
            Point2::new(4.0, 4.0),
            Point2::new(0.0, 4.0),
            Point2::new(0.5, 0.5),
        ];
        let c = hull_centroid(&sq).unwrap();
        assert!((c.x - 2.0).abs() < 1e-12 && (c.y - 2.0).abs() < 1e-12);
        assert!(hull_centroid(&tri[..2]).is_none());
    }

    #[test]
    fn hull_of_square_with_interior_point() {
        let pts = [
            Point2::new(0.0, 0.0),
            Point2::new(4.0, 0.0),
            Point2::new(4.0, 4.0),
            Point2::new(0.0, 4.0),
            Point2::new(2.0, 2.0),
            Point2::new(2.0, 0.0),
        ];
        let h = gift_wrap(&pts);
        assert_eq!(h.len(), 4);
        assert_eq!(hull_side(&h, Point2::new(2.0, 2.0), 1.0), Some(true));
        assert_eq!(hull_side(&h, Point2::new(6.0, 2.0), 1.0), Some(false));
        assert_eq!(hull_side(&h, Point2::new(3.5, 2.0), 1.0), None);
    }

    #[test]
    fn three_rows() {
        let mut d = Vec::new();
        for y in [10.0, 26.0, 42.0, 58.0] {
            d.push(Point2::new(70.0, y));
            d.push(Point2::new(55.0, y));
        }
        d.push(Point2::new(40.0, 28.0));
        d.push(Point2::new(40.0, 40.0));
        assert_eq!(expected_zone(&d, Point2::new(80.0, 30.0), 1.0), Some(ExpectedZone::Back));
        assert_eq!(expected_zone(&d, Point2::new(30.0, 30.0), 1.0), Some(ExpectedZone::Front));
        assert_eq!(expected_zone(&d, Point2::new(60.0, 30.0), 1.0), Some(ExpectedZone::Inside));
        assert_eq!(expected_zone(&d, Point2::new(60.0, 4.0), 1.0), Some(ExpectedZone::Wing));
        assert_eq!(expected_zone(&d, Point2::new(70.5, 30.0), 1.0), None);
        assert_eq!(three_lines(&[0.0, 0.0, 1.0, 1.0, 5.0]), Some([0.0, 1.0, 5.0]));
        // Two equally good splits.
        assert_eq!(three_lines(&[0.0, 1.0, 2.0, 3.0]), None);
    }
}
