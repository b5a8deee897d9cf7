//! Small 3D vector toolkit shared by the scenario, visibility and reflector code.

use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::PlanError;

/// A point (or free vector) in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

pub type Vec3 = Point3;

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn dot(self, o: Self) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scale(self, k: f64) -> Self {
        Self::new(self.x * k, self.y * k, self.z * k)
    }

    /// Ground-plane projection.
    pub fn xy(self) -> [f64; 2] {
        [self.x, self.y]
    }

    pub fn lerp(self, o: Self, t: f64) -> Self {
        self + (o - self).scale(t)
    }
}

impl Add for Point3 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Point3 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Point3 {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Point3 {
    type Output = Self;
    fn mul(self, k: f64) -> Self {
        self.scale(k)
    }
}

/// 3D Euclidean distance.
pub fn dist3d(p: Point3, q: Point3) -> f64 {
    (p - q).norm()
}

/// Horizontal distance, ignoring height.
pub fn dist2d(p: Point3, q: Point3) -> f64 {
    (p.x - q.x).hypot(p.y - q.y)
}

/// A direction with unit length (within 1e-12).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Point3", into = "Point3")]
pub struct UnitVec3(Point3);

impl UnitVec3 {
    pub const X: UnitVec3 = UnitVec3(Point3::new(1.0, 0.0, 0.0));
    pub const Y: UnitVec3 = UnitVec3(Point3::new(0.0, 1.0, 0.0));
    pub const Z: UnitVec3 = UnitVec3(Point3::new(0.0, 0.0, 1.0));

    /// Normalizes `v`; fails for zero or non-finite input.
    pub fn new(v: Vec3) -> Result<Self, PlanError> {
        let n = v.norm();
        if !n.is_finite() || n < 1e-12 {
            return Err(PlanError::DegenerateGeometry(format!(
                "cannot normalize vector ({}, {}, {})",
                v.x, v.y, v.z
            )));
        }
        Ok(Self(v.scale(1.0 / n)))
    }

    /// Direction from `from` towards `to`.
    pub fn between(from: Point3, to: Point3) -> Result<Self, PlanError> {
        Self::new(to - from)
    }

    pub fn get(self) -> Vec3 {
        self.0
    }

    pub fn dot(self, o: UnitVec3) -> f64 {
        self.0.dot(o.0)
    }
}

impl Neg for UnitVec3 {
    type Output = Self;
    fn neg(self) -> Self {
        Self(-self.0)
    }
}

impl TryFrom<Point3> for UnitVec3 {
    type Error = PlanError;
    fn try_from(v: Point3) -> Result<Self, PlanError> {
        if (v.norm() - 1.0).abs() > 1e-9 {
            return Err(PlanError::DegenerateGeometry(
                "expected a unit vector".to_string(),
            ));
        }
        UnitVec3::new(v)
    }
}

impl From<UnitVec3> for Point3 {
    fn from(u: UnitVec3) -> Point3 {
        u.0
    }
}

/// Strict point-in-polygon test; points within `tol` of an edge count as outside.
pub fn point_in_polygon_strict(p: [f64; 2], poly: &[[f64; 2]], tol: f64) -> bool {
    let n = poly.len();
    for i in 0..n {
        if dist_point_segment(p, poly[i], poly[(i + 1) % n]) <= tol {
            return false;
        }
    }
    crossing_inside(p, poly)
}

/// Point-in-polygon where boundary points count as inside.
pub fn point_in_polygon_closed(p: [f64; 2], poly: &[[f64; 2]], tol: f64) -> bool {
    let n = poly.len();
    for i in 0..n {
        if dist_point_segment(p, poly[i], poly[(i + 1) % n]) <= tol {
            return true;
        }
    }
    crossing_inside(p, poly)
}

fn crossing_inside(p: [f64; 2], poly: &[[f64; 2]]) -> bool {
    let mut inside = false;
    let n = poly.len();
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if p[0] < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

pub fn dist_point_segment(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    };
    (p[0] - a[0] - t * dx).hypot(p[1] - a[1] - t * dy)
}

/// Twice the signed area; positive for counter-clockwise rings.
pub fn signed_area2(poly: &[[f64; 2]]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            a[0] * b[1] - b[0] * a[1]
        })
        .sum()
}

/// Proper or touching intersection of two closed 2D segments.
pub fn segments_intersect(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    fn orient(p: [f64; 2], q: [f64; 2], r: [f64; 2]) -> f64 {
        (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])
    }
    fn on_seg(p: [f64; 2], q: [f64; 2], r: [f64; 2]) -> bool {
        r[0] >= p[0].min(q[0])
            && r[0] <= p[0].max(q[0])
            && r[1] >= p[1].min(q[1])
            && r[1] <= p[1].max(q[1])
    }
    let (o1, o2, o3, o4) = (
        orient(a, b, c),
        orient(a, b, d),
        orient(c, d, a),
        orient(c, d, b),
    );
    if ((o1 > 0.0 && o2 < 0.0) || (o1 < 0.0 && o2 > 0.0))
        && ((o3 > 0.0 && o4 < 0.0) || (o3 < 0.0 && o4 > 0.0))
    {
        return true;
    }
    (o1 == 0.0 && on_seg(a, b, c))
        || (o2 == 0.0 && on_seg(a, b, d))
        || (o3 == 0.0 && on_seg(c, d, a))
        || (o4 == 0.0 && on_seg(c, d, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distances() {
        let o = Point3::new(0.0, 0.0, 0.0);
        assert_eq!(dist3d(o, Point3::new(3.0, 4.0, 0.0)), 5.0);
        assert_eq!(dist2d(o, Point3::new(3.0, 4.0, 0.0)), 5.0);
        assert_eq!(dist3d(o, Point3::new(0.0, 0.0, 10.0)), 10.0);
        assert_eq!(dist2d(o, Point3::new(0.0, 0.0, 10.0)), 0.0);
        // 30-40-50 horizontal leg, 23.5 m vertical drop: sqrt(3052.25)
        let g = Point3::new(0.0, 0.0, 25.0);
        let s = Point3::new(30.0, 40.0, 1.5);
        let want = (2500.0f64 + 23.5 * 23.5).sqrt();
        assert!((dist3d(g, s) - want).abs() < 1e-12);
        assert!((want - 55.247).abs() < 5e-4);
    }

    #[test]
    fn polygon_tests() {
        let sq = [[0.0, 0.0], [2.0, 0.0], [2.0, 2.0], [0.0, 2.0]];
        assert!(point_in_polygon_strict([1.0, 1.0], &sq, 1e-9));
        assert!(!point_in_polygon_strict([2.0, 1.0], &sq, 1e-9));
        assert!(point_in_polygon_closed([2.0, 1.0], &sq, 1e-9));
        assert!(!point_in_polygon_closed([3.0, 1.0], &sq, 1e-9));
        assert!(signed_area2(&sq) > 0.0);
    }

    #[test]
    fn unit_vectors_reject_zero() {
        assert!(UnitVec3::new(Point3::default()).is_err());
        let u = UnitVec3::new(Point3::new(3.0, 0.0, 4.0)).unwrap();
        assert!((u.get().norm() - 1.0).abs() < 1e-12);
    }
}
