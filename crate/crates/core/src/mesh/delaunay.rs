//! Lawson edge flipping for triangulations of points on the unit sphere.

use std::collections::HashMap;

use super::sphere::{self, Vec3};
use crate::error::{Error, Result};

const MAX_PASSES: usize = 10_000;

fn orientation(a: Vec3, b: Vec3, c: Vec3) -> f64 {
    (b - a).cross(c - a).dot(a + b + c)
}

/// Flips edges until every edge is locally Delaunay (equivalently, every
/// face lies on the convex hull of the points). Returns the number of flips.
pub(crate) fn make_delaunay(points: &[Vec3], tris: &mut [[usize; 3]]) -> Result<usize> {
    let mut total = 0;
    for _ in 0..MAX_PASSES {
        let mut half: HashMap<(usize, usize), (usize, usize)> = HashMap::with_capacity(3 * tris.len());
        for (t, tri) in tris.iter().enumerate() {
            for k in 0..3 {
                half.insert((tri[k], tri[(k + 1) % 3]), (t, k));
            }
        }
        let mut touched = vec![false; tris.len()];
        let mut flips = 0;
        for t in 0..tris.len() {
            for k in 0..3 {
                if touched[t] {
                    break;
                }
                let tri = tris[t];
                let (a, b, c) = (tri[k], tri[(k + 1) % 3], tri[(k + 2) % 3]);
                if a > b {
                    continue;
                }
                let Some(&(t2, k2)) = half.get(&(b, a)) else {
                    return Err(Error::Topology(format!("open edge between cells {a} and {b}")));
                };
                if touched[t2] {
                    continue;
                }
                let d = tris[t2][(k2 + 2) % 3];
                let (pa, pb, pc, pd) = (points[a], points[b], points[c], points[d]);
                let scale = (pb - pa).cross(pc - pa).norm() * (pd - pa).norm();
                if sphere::in_circumcircle(pa, pb, pc, pd) <= 1e-12 * scale {
                    continue;
                }
                // The quad a, d, b, c must stay convex for the flip to be valid.
                if orientation(pc, pa, pd) <= 0.0 || orientation(pd, pb, pc) <= 0.0 {
                    continue;
                }
                tris[t] = [c, a, d];
                tris[t2] = [d, b, c];
                touched[t] = true;
                touched[t2] = true;
                flips += 1;
            }
        }
        if flips == 0 {
            return Ok(total);
        }
        total += flips;
    }
    Err(Error::Topology(format!("edge flipping did not converge after {MAX_PASSES} passes")))
}
