//! Planar geometry helpers: points, polylines and oriented rectangles.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

/// A point or vector in the plane, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl From<[f64; 2]> for Vec2 {
    fn from(a: [f64; 2]) -> Self {
        Vec2::new(a[0], a[1])
    }
}

impl From<Vec2> for [f64; 2] {
    fn from(v: Vec2) -> Self {
        [v.x, v.y]
    }
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Unit vector pointing along `heading`.
    pub fn from_heading(heading: f64) -> Self {
        Self::new(heading.cos(), heading.sin())
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    /// Counter-clockwise perpendicular.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn normalized(self) -> Option<Vec2> {
        let n = self.norm();
        (n > 0.0).then(|| self * (1.0 / n))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let w = a.rem_euclid(two_pi);
    if w > PI {
        w - two_pi
    } else {
        w
    }
}

/// Closest point on segment `[a, b]` to `p`, with the segment parameter in `[0, 1]`.
pub fn closest_on_segment(p: Vec2, a: Vec2, b: Vec2) -> (Vec2, f64) {
    let ab = b - a;
    let len_sq = ab.norm_sq();
    if len_sq == 0.0 {
        return (a, 0.0);
    }
    let t = ((p - a).dot(ab) / len_sq).clamp(0.0, 1.0);
    (a + ab * t, t)
}

/// Result of projecting a point onto a polyline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    /// Closest point on the polyline.
    pub point: Vec2,
    /// Euclidean distance from the query to `point`.
    pub distance: f64,
    /// Arc length from the polyline start to `point`.
    pub arc: f64,
    /// Index of the segment holding `point`.
    pub segment: usize,
}

/// Projects `p` onto `pts`. Ties go to the earliest segment.
pub fn project_polyline(p: Vec2, pts: &[Vec2]) -> Projection {
    debug_assert!(pts.len() >= 2);
    let mut best = Projection {
        point: pts[0],
        distance: f64::INFINITY,
        arc: 0.0,
        segment: 0,
    };
    let mut arc0 = 0.0;
    for (i, w) in pts.windows(2).enumerate() {
        let (q, t) = closest_on_segment(p, w[0], w[1]);
        let d = p.dist(q);
        let seg_len = w[0].dist(w[1]);
        if d < best.distance {
            best = Projection {
                point: q,
                distance: d,
                arc: arc0 + t * seg_len,
                segment: i,
            };
        }
        arc0 += seg_len;
    }
    best
}

pub fn polyline_length(pts: &[Vec2]) -> f64 {
    pts.windows(2).map(|w| w[0].dist(w[1])).sum()
}

/// Point and unit tangent at arc length `s` (clamped to the polyline).
pub fn point_at_arc(pts: &[Vec2], s: f64) -> (Vec2, Vec2) {
    let mut remaining = s.max(0.0);
    for w in pts.windows(2) {
        let seg = w[1] - w[0];
        let len = seg.norm();
        if remaining <= len {
            let dir = seg * (1.0 / len);
            return (w[0] + dir * remaining, dir);
        }
        remaining -= len;
    }
    let n = pts.len();
    let dir = (pts[n - 1] - pts[n - 2]).normalized().unwrap_or(Vec2::new(1.0, 0.0));
    (pts[n - 1], dir)
}

/// Offsets a polyline sideways by `offset` (positive to the left) using averaged vertex normals.
pub fn offset_polyline(pts: &[Vec2], offset: f64) -> Vec<Vec2> {
    let n = pts.len();
    let seg_normal = |i: usize| -> Vec2 { (pts[i + 1] - pts[i]).normalized().unwrap_or(Vec2::new(1.0, 0.0)).perp() };
    (0..n)
        .map(|i| {
            let normal = if i == 0 {
                seg_normal(0)
            } else if i == n - 1 {
                seg_normal(n - 2)
            } else {
                let a = seg_normal(i - 1);
                let b = seg_normal(i);
                let m = (a + b).normalized().unwrap_or(b);
                // miter: keep the perpendicular distance equal to `offset`
                m * (1.0 / m.dot(b).max(0.5))
            };
            pts[i] + normal * offset
        })
        .collect()
}

fn orient(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    (b - a).cross(c - a)
}

/// Whether closed segments `[p1, p2]` and `[q1, q2]` intersect.
pub fn segments_intersect(p1: Vec2, p2: Vec2, q1: Vec2, q2: Vec2) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    let on = |a: Vec2, b: Vec2, c: Vec2| {
        c.x >= a.x.min(b.x) && c.x <= a.x.max(b.x) && c.y >= a.y.min(b.y) && c.y <= a.y.max(b.y)
    };
    (d1 == 0.0 && on(q1, q2, p1))
        || (d2 == 0.0 && on(q1, q2, p2))
        || (d3 == 0.0 && on(p1, p2, q1))
        || (d4 == 0.0 && on(p1, p2, q2))
}

/// An oriented rectangle centered at `center`, `length` along `heading`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedRect {
    pub center: Vec2,
    pub heading: f64,
    pub length: f64,
    pub width: f64,
}

impl OrientedRect {
    pub fn new(center: Vec2, heading: f64, length: f64, width: f64) -> Self {
        Self {
            center,
            heading,
            length,
            width,
        }
    }

    fn axes(&self) -> (Vec2, Vec2) {
        let f = Vec2::from_heading(self.heading);
        (f, f.perp())
    }

    /// Corners in counter-clockwise order starting front-left.
    pub fn corners(&self) -> [Vec2; 4] {
        let (f, l) = self.axes();
        let hf = f * (self.length / 2.0);
        let hl = l * (self.width / 2.0);
        let c = self.center;
        [c + hf + hl, c - hf + hl, c - hf - hl, c + hf - hl]
    }

    /// Separating-axis overlap test; touching rectangles count as overlapping.
    pub fn intersects(&self, other: &OrientedRect) -> bool {
        let (a0, a1) = self.axes();
        let (b0, b1) = other.axes();
        let ca = self.corners();
        let cb = other.corners();
        for axis in [a0, a1, b0, b1] {
            let (amin, amax) = extent(&ca, axis);
            let (bmin, bmax) = extent(&cb, axis);
            if amax < bmin || bmax < amin {
                return false;
            }
        }
        true
    }

    /// Whether any edge of the rectangle crosses the polyline.
    pub fn crosses_polyline(&self, pts: &[Vec2]) -> bool {
        let c = self.corners();
        pts.windows(2)
            .any(|w| (0..4).any(|i| segments_intersect(c[i], c[(i + 1) % 4], w[0], w[1])))
    }
}

fn extent(pts: &[Vec2; 4], axis: Vec2) -> (f64, f64) {
    pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        let d = p.dot(axis);
        (lo.min(d), hi.max(d))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_is_half_open() {
        assert_eq!(wrap_angle(PI), PI);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-15);
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(0.5) - 0.5).abs() < 1e-15);
        assert!((wrap_angle(-0.5) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn rect_overlap() {
        let a = OrientedRect::new(Vec2::ZERO, 0.0, 4.0, 2.0);
        let b = OrientedRect::new(Vec2::new(3.9, 0.0), 0.0, 4.0, 2.0);
        let c = OrientedRect::new(Vec2::new(4.1, 0.0), 0.0, 4.0, 2.0);
        assert!(a.intersects(&b));
        assert!(!a.intersects(&c));
        // rotated diamond just off the corner
        let d = OrientedRect::new(Vec2::new(3.5, 2.5), PI / 4.0, 1.0, 1.0);
        assert!(!a.intersects(&d));
    }

    #[test]
    fn projection_arc() {
        let pts = [Vec2::new(0.0, 0.0), Vec2::new(10.0, 0.0), Vec2::new(10.0, 10.0)];
        let p = project_polyline(Vec2::new(12.0, 5.0), &pts);
        assert_eq!(p.segment, 1);
        assert!((p.arc - 15.0).abs() < 1e-12);
        assert!((p.distance - 2.0).abs() < 1e-12);
    }

    #[test]
    fn offset_keeps_distance() {
        let pts = [Vec2::new(0.0, 0.0), Vec2::new(10.0, 0.0), Vec2::new(10.0, 10.0)];
        let off = offset_polyline(&pts, 1.0);
        for q in &off {
            let d = project_polyline(*q, &pts).distance;
            assert!((d - 1.0).abs() < 1e-9, "{d}");
        }
    }
}
