//! Minimal 3-vector algebra and spherical primitives on the unit sphere.

use std::ops::{Add, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    /// Unit vector for longitude `lon` and latitude `lat` (radians).
    pub fn from_lon_lat(lon: f64, lat: f64) -> Self {
        let (sl, cl) = lat.sin_cos();
        let (so, co) = lon.sin_cos();
        Self::new(cl * co, cl * so, sl)
    }

    /// Longitude in `[0, 2π)` and latitude in `[-π/2, π/2]`.
    pub fn lon_lat(self) -> (f64, f64) {
        let mut lon = self.y.atan2(self.x);
        if lon < 0.0 {
            lon += 2.0 * std::f64::consts::PI;
        }
        let lat = self.z.atan2((self.x * self.x + self.y * self.y).sqrt());
        (lon, lat)
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

    pub fn normalized(self) -> Self {
        let n = self.norm();
        Self::new(self.x / n, self.y / n, self.z / n)
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Great-circle angle between two unit vectors, stable for small and large angles.
pub fn arc_angle(a: Vec3, b: Vec3) -> f64 {
    a.cross(b).norm().atan2(a.dot(b))
}

/// Area of the spherical triangle `(a, b, c)` on the unit sphere (always ≥ 0).
///
/// Uses `tan(E/2) = |a·(b×c)| / (1 + a·b + b·c + c·a)`.
pub fn triangle_area(a: Vec3, b: Vec3, c: Vec3) -> f64 {
    let triple = a.dot(b.cross(c)).abs();
    let denom = 1.0 + a.dot(b) + b.dot(c) + c.dot(a);
    2.0 * triple.atan2(denom)
}

/// Area of `(a, b, c)`, negative when the triangle is clockwise seen from outside.
pub fn signed_triangle_area(a: Vec3, b: Vec3, c: Vec3) -> f64 {
    let triple = a.dot(b.cross(c));
    let denom = 1.0 + a.dot(b) + b.dot(c) + c.dot(a);
    2.0 * triple.atan2(denom)
}

/// Circumcenter of the spherical triangle `(a, b, c)`, taken on the side the
/// counterclockwise orientation points to.
pub fn circumcenter(a: Vec3, b: Vec3, c: Vec3) -> Vec3 {
    (b - a).cross(c - a).normalized()
}

/// `(d - a)·((b - a)×(c - a))`: positive when `d` lies strictly inside the
/// circumcircle of the counterclockwise triangle `(a, b, c)` on the sphere.
pub fn in_circumcircle(a: Vec3, b: Vec3, c: Vec3, d: Vec3) -> f64 {
    (d - a).dot((b - a).cross(c - a))
}

/// Intersection of the great circles through `(a, b)` and `(c, d)`, chosen on
/// the same hemisphere as the midpoint of `a` and `b`. `None` if either pair
/// is degenerate or the circles coincide.
pub fn great_circle_intersection(a: Vec3, b: Vec3, c: Vec3, d: Vec3) -> Option<Vec3> {
    let n1 = a.cross(b);
    let n2 = c.cross(d);
    let p = n1.cross(n2);
    let len = p.norm();
    if !(len > 1e-300) || n1.norm() < 1e-15 || n2.norm() < 1e-15 {
        return None;
    }
    let p = p * (1.0 / len);
    Some(if p.dot(a + b) < 0.0 { -p } else { p })
}

/// Unit tangent at `at` pointing along the great circle toward `to`.
pub fn tangent_toward(at: Vec3, to: Vec3) -> Vec3 {
    (to - at * at.dot(to)).normalized()
}
