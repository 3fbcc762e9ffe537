//! Convex hull of a team's outfield players and the polygon queries the
//! zone and defense-type rules need.

use serde::{Deserialize, Serialize};

use super::TacticalError;
use crate::model::Point2;

const EPS: f64 = 1e-9;

/// Convex polygon with counter-clockwise vertices and no collinear vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeamBlock {
    pub hull: Vec<Point2>,
}

fn turn(o: Point2, a: Point2, b: Point2) -> f64 {
    (a - o).cross(b - o)
}

/// Andrew's monotone chain. Fails when fewer than three points are given or
/// all of them are collinear.
pub fn build_block(points: &[Point2]) -> Result<TeamBlock, TacticalError> {
    if points.len() < 3 {
        return Err(TacticalError::DegenerateBlock { points: points.len() });
    }
    let mut pts: Vec<Point2> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();

    let mut lower: Vec<Point2> = Vec::with_capacity(pts.len());
    for &p in &pts {
        while lower.len() >= 2 && turn(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point2> = Vec::with_capacity(pts.len());
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && turn(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    if lower.len() < 3 {
        return Err(TacticalError::DegenerateBlock { points: points.len() });
    }
    Ok(TeamBlock { hull: lower })
}

impl TeamBlock {
    pub fn area(&self) -> f64 {
        polygon_area(&self.hull)
    }

    pub fn centroid(&self) -> Point2 {
        let a = self.area();
        let n = self.hull.len();
        let (mut cx, mut cy) = (0.0, 0.0);
        for i in 0..n {
            let (p, q) = (self.hull[i], self.hull[(i + 1) % n]);
            let c = p.cross(q);
            cx += (p.x + q.x) * c;
            cy += (p.y + q.y) * c;
        }
        Point2::new(cx / (6.0 * a), cy / (6.0 * a))
    }

    /// Inside-or-on test in O(log n): locate the wedge around the first
    /// vertex that contains `p`, then test the opposite edge.
    pub fn contains(&self, p: Point2) -> bool {
        let h = &self.hull;
        let n = h.len();
        let o = h[0];
        let tol = |a: Point2, b: Point2| EPS * (1.0 + (b - a).norm());
        if turn(o, h[1], p) < -tol(o, h[1]) || turn(o, h[n - 1], p) > tol(o, h[n - 1]) {
            return false;
        }
        let (mut lo, mut hi) = (1, n - 1);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if turn(o, h[mid], p) >= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        turn(h[lo], h[hi], p) >= -tol(h[lo], h[hi])
    }

    pub fn min_x(&self) -> f64 {
        self.hull.iter().map(|p| p.x).fold(f64::INFINITY, f64::min)
    }

    pub fn max_x(&self) -> f64 {
        self.hull.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Area of the part of the block with `x <= x0`.
    pub fn area_left_of(&self, x0: f64) -> f64 {
        polygon_area(&clip_left_of(&self.hull, x0))
    }
}

/// Shoelace area of a counter-clockwise polygon.
pub fn polygon_area(poly: &[Point2]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    (0..n).map(|i| poly[i].cross(poly[(i + 1) % n])).sum::<f64>() / 2.0
}

/// Sutherland–Hodgman clip of a polygon against the half-plane `x <= x0`.
pub fn clip_left_of(poly: &[Point2], x0: f64) -> Vec<Point2> {
    let n = poly.len();
    let mut out = Vec::with_capacity(n + 2);
    for i in 0..n {
        let (cur, next) = (poly[i], poly[(i + 1) % n]);
        let cur_in = cur.x <= x0;
        let next_in = next.x <= x0;
        if cur_in {
            out.push(cur);
        }
        if cur_in != next_in {
            let t = (x0 - cur.x) / (next.x - cur.x);
            out.push(Point2::new(x0, cur.y + t * (next.y - cur.y)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    #[test]
    fn square_with_center() {
        let b = build_block(&[p(0., 0.), p(1., 0.), p(1., 1.), p(0., 1.), p(0.5, 0.5)]).unwrap();
        assert_eq!(b.hull.len(), 4);
        assert!(b.contains(p(0.5, 0.5)));
        assert!((b.area() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn triangle_is_its_own_hull() {
        let tri = [p(0., 0.), p(4., 0.), p(0., 3.)];
        let b = build_block(&tri).unwrap();
        assert_eq!(b.hull.len(), 3);
        for v in tri {
            assert!(b.hull.contains(&v));
        }
        assert!(b.area() > 0.0, "counter-clockwise orientation");
    }

    #[test]
    fn collinear_points_are_excluded_from_vertices() {
        let b = build_block(&[p(0., 0.), p(1., 0.), p(2., 0.), p(2., 2.), p(0., 2.), p(1., 2.)]).unwrap();
        assert_eq!(b.hull.len(), 4);
    }

    #[test]
    fn degenerate_inputs_fail() {
        assert!(build_block(&[p(0., 0.), p(1., 1.)]).is_err());
        assert!(build_block(&[p(0., 0.), p(1., 1.), p(2., 2.), p(3., 3.)]).is_err());
        assert!(build_block(&[p(1., 1.), p(1., 1.), p(1., 1.)]).is_err());
    }

    #[test]
    fn boundary_points_are_inside() {
        let b = build_block(&[p(0., 0.), p(2., 0.), p(2., 2.), p(0., 2.)]).unwrap();
        assert!(b.contains(p(1.0, 0.0)));
        assert!(b.contains(p(2.0, 2.0)));
        assert!(!b.contains(p(2.0 + 1e-6, 1.0)));
        assert!(!b.contains(p(-1.0, -1.0)));
    }

    #[test]
    fn clipped_area_splits_total() {
        let b = build_block(&[p(40., 10.), p(70., 10.), p(70., 50.), p(40., 50.)]).unwrap();
        let left = b.area_left_of(52.5);
        assert!((left - 12.5 * 40.0).abs() < 1e-9);
        assert!((b.area_left_of(100.0) - b.area()).abs() < 1e-9);
        assert_eq!(b.area_left_of(0.0), 0.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_points() -> impl Strategy<Value = Vec<Point2>> {
            proptest::collection::vec((0.0f64..105.0, 0.0f64..68.0), 3..14)
                .prop_map(|v| v.into_iter().map(|(x, y)| p(x, y)).collect())
        }

        proptest! {
            #[test]
            fn hull_contains_inputs(pts in arb_points()) {
                if let Ok(b) = build_block(&pts) {
                    for q in &pts {
                        prop_assert!(b.contains(*q));
                    }
                    prop_assert!(b.area() > 0.0);
                }
            }

            #[test]
            fn area_is_rigid_motion_invariant(pts in arb_points(), theta in 0.0f64..6.283, dx in -50.0f64..50.0, dy in -50.0f64..50.0) {
                if let Ok(b) = build_block(&pts) {
                    let (s, c) = theta.sin_cos();
                    let moved: Vec<_> = pts.iter().map(|q| p(c * q.x - s * q.y + dx, s * q.x + c * q.y + dy)).collect();
                    let b2 = build_block(&moved).unwrap();
                    prop_assert!((b.area() - b2.area()).abs() <= 1e-9 * b.area().max(1.0));
                }
            }
        }
    }
}
