//! Quasi-uniform and locally refined icosahedral Voronoi meshes.
//!
//! Generators start on a recursively subdivided icosahedron. Refinement
//! remaps them radially around a cap center so the point density follows a
//! target spacing, then density-weighted Lloyd iterations pull every
//! generator toward the centroid of its Voronoi cell. The triangulation is
//! re-made Delaunay after every move.

use std::f64::consts::PI;

use super::connectivity::build_connectivity;
use super::delaunay::make_delaunay;
use super::sphere::{self, Vec3};
use super::VoronoiMesh;
use crate::error::{Error, Result};

/// Level 7 already has 163 842 cells.
pub const MAX_SUBDIVISION_LEVEL: u32 = 7;
pub const MAX_LLOYD_ITERATIONS: u32 = 500;

/// Local refinement around a spherical cap.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RefineSpec {
    /// Cap center `(longitude, latitude)` in radians.
    pub center: (f64, f64),
    /// Cap radius in radians, in `(0, π)`.
    pub radius: f64,
    /// Ratio of coarse to fine cell diameter.
    pub factor: u32,
}

impl RefineSpec {
    fn validate(&self) -> Result<()> {
        if self.factor < 1 {
            return Err(Error::Config("refine factor must be at least 1".into()));
        }
        if !(self.radius > 0.0 && self.radius < PI) {
            return Err(Error::Config(format!("refine radius {} must lie in (0, π)", self.radius)));
        }
        Ok(())
    }

    /// Relative target spacing at angular distance `dist` from the cap center:
    /// `1/factor` inside the cap, 1 far away, cosine-graded in between over a
    /// band as wide as the cap radius.
    pub fn spacing(&self, dist: f64) -> f64 {
        let fine = 1.0 / self.factor as f64;
        let band = self.radius.min(PI - self.radius).max(1e-3);
        if dist <= self.radius {
            fine
        } else if dist >= self.radius + band {
            1.0
        } else {
            let t = (dist - self.radius) / band;
            fine + (1.0 - fine) * 0.5 * (1.0 - (PI * t).cos())
        }
    }
}

fn clamp_params(level: u32, lloyd: u32) -> (u32, u32) {
    if level > MAX_SUBDIVISION_LEVEL {
        log::warn!("subdivision level {level} clamped to {MAX_SUBDIVISION_LEVEL}");
    }
    if lloyd > MAX_LLOYD_ITERATIONS {
        log::warn!("lloyd iterations {lloyd} clamped to {MAX_LLOYD_ITERATIONS}");
    }
    (level.min(MAX_SUBDIVISION_LEVEL), lloyd.min(MAX_LLOYD_ITERATIONS))
}

/// Quasi-uniform mesh: `10·4ⁿ + 2` cells, twelve of them pentagons.
pub fn generate_icosphere_mesh(subdivision_level: u32, lloyd_iterations: u32, radius: f64) -> Result<VoronoiMesh> {
    let (level, lloyd) = clamp_params(subdivision_level, lloyd_iterations);
    let (mut points, mut tris) = icosphere(level);
    relax(&mut points, &mut tris, lloyd, |_| 1.0)?;
    VoronoiMesh::from_delaunay(radius, points, &tris)
}

/// Mesh refined by `spec.factor` inside a cap. `factor == 1` reproduces
/// [`generate_icosphere_mesh`].
pub fn generate_refined_mesh(
    subdivision_level: u32,
    spec: RefineSpec,
    lloyd_iterations: u32,
    radius: f64,
) -> Result<VoronoiMesh> {
    spec.validate()?;
    if spec.factor == 1 {
        return generate_icosphere_mesh(subdivision_level, lloyd_iterations, radius);
    }
    let (level, lloyd) = clamp_params(subdivision_level, lloyd_iterations);
    let (mut points, mut tris) = icosphere(level);
    let center = Vec3::from_lon_lat(spec.center.0, spec.center.1);
    remap_toward(&mut points, center, &spec);
    make_delaunay(&points, &mut tris)?;
    relax(&mut points, &mut tris, lloyd, |p| {
        let s = spec.spacing(sphere::arc_angle(p, center));
        1.0 / (s * s * s * s)
    })?;
    VoronoiMesh::from_delaunay(radius, points, &tris)
}

/// Subdivided icosahedron on the unit sphere, faces counterclockwise from outside.
pub(crate) fn icosphere(level: u32) -> (Vec<Vec3>, Vec<[usize; 3]>) {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut points: Vec<Vec3> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalized())
    .collect();
    let mut tris: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut midpoint = std::collections::HashMap::new();
        let mut next = Vec::with_capacity(4 * tris.len());
        let mut mid = |a: usize, b: usize, points: &mut Vec<Vec3>| -> usize {
            *midpoint.entry((a.min(b), a.max(b))).or_insert_with(|| {
                points.push((points[a] + points[b]).normalized());
                points.len() - 1
            })
        };
        for &[a, b, c] in &tris {
            let ab = mid(a, b, &mut points);
            let bc = mid(b, c, &mut points);
            let ca = mid(c, a, &mut points);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        tris = next;
    }
    (points, tris)
}

/// Moves points radially about `center` so the point density follows
/// `spacing⁻²`: a point at uniform-measure quantile `q` lands where the
/// target cumulative density reaches `q`.
fn remap_toward(points: &mut [Vec3], center: Vec3, spec: &RefineSpec) {
    const N: usize = 8192;
    let dr = PI / N as f64;
    let density = |r: f64| {
        let s = spec.spacing(r);
        r.sin() / (s * s)
    };
    let mut cdf = vec![0.0; N + 1];
    for k in 0..N {
        let (r0, r1) = (k as f64 * dr, (k + 1) as f64 * dr);
        cdf[k + 1] = cdf[k] + 0.5 * dr * (density(r0) + density(r1));
    }
    let total = cdf[N];
    for c in &mut cdf {
        *c /= total;
    }
    let invert = |q: f64| -> f64 {
        let k = cdf.partition_point(|&c| c < q).clamp(1, N);
        let (c0, c1) = (cdf[k - 1], cdf[k]);
        let frac = if c1 > c0 { (q - c0) / (c1 - c0) } else { 0.0 };
        ((k - 1) as f64 + frac) * dr
    };
    for p in points.iter_mut() {
        let r = sphere::arc_angle(*p, center);
        if r < 1e-12 || PI - r < 1e-12 {
            continue;
        }
        let dir = sphere::tangent_toward(center, *p);
        let rho = invert(0.5 * (1.0 - r.cos()));
        *p = (center * rho.cos() + dir * rho.sin()).normalized();
    }
}

/// Density-weighted Lloyd iterations, each followed by Delaunay flips.
fn relax(points: &mut [Vec3], tris: &mut [[usize; 3]], iterations: u32, density: impl Fn(Vec3) -> f64) -> Result<()> {
    for _ in 0..iterations {
        let conn = build_connectivity(points.len(), tris)?;
        let vertex: Vec<Vec3> = tris
            .iter()
            .map(|&[a, b, c]| sphere::circumcenter(points[a], points[b], points[c]))
            .collect();
        let mut moved = Vec::with_capacity(points.len());
        for i in 0..points.len() {
            let lo = conn.cell_offsets[i];
            let m = conn.cell_offsets[i + 1] - lo;
            let xi = points[i];
            let mut acc = Vec3::default();
            for j in 0..m {
                let xv = vertex[conn.vertices_on_cell[lo + j]];
                let e0 = (xi + points[conn.cells_on_cell[lo + j]]).normalized();
                let e1 = (xi + points[conn.cells_on_cell[lo + (j + 1) % m]]).normalized();
                for (a, b, c) in [(xi, e0, xv), (xi, xv, e1)] {
                    let g = a + b + c;
                    let w = sphere::triangle_area(a, b, c) * density(g.normalized());
                    acc = acc + g * w;
                }
            }
            moved.push(acc.normalized());
        }
        points.copy_from_slice(&moved);
        make_delaunay(points, tris)?;
    }
    Ok(())
}
