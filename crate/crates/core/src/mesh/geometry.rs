//! Metric quantities, sign conventions and perpendicular-flux weights.

use super::connectivity::Connectivity;
use super::sphere::{self, Vec3};
use crate::error::{Error, Result};

/// Lengths (m) and areas (m²) of a mesh on a sphere of given radius.
#[derive(Clone, Debug, PartialEq)]
pub struct Geometry {
    /// `l_e`: primal edge length, between the two vertices of `e`.
    pub edge_length: Vec<f64>,
    /// `d_e`: dual edge length, between the two cell centers of `e`.
    pub dual_edge_length: Vec<f64>,
    pub area_cell: Vec<f64>,
    /// Dual cell area, accumulated from the three kites meeting at the vertex.
    pub area_vertex: Vec<f64>,
    /// Kite areas per cell slot, parallel to `vertices_on_cell`.
    pub kite_area: Vec<f64>,
    /// Kite areas per vertex slot, parallel to `cells_on_vertex`.
    pub kite_on_vertex: Vec<[f64; 3]>,
}

/// `n_{e,i}` and `t_{e,v}` sign tables, stored per incidence.
#[derive(Clone, Debug, PartialEq)]
pub struct Signs {
    pub n_sign: Vec<[f64; 2]>,
    pub t_sign: Vec<[f64; 2]>,
    pub edge_sign_on_cell: Vec<f64>,
    pub t_sign_on_vertex: Vec<[f64; 3]>,
}

/// `x_e`: intersection of the arc joining the cell centers with the arc
/// joining the two vertices of each edge.
pub fn edge_points(conn: &Connectivity, cell_center: &[Vec3], vertex_pos: &[Vec3]) -> Result<Vec<Vec3>> {
    conn.cells_on_edge
        .iter()
        .zip(&conn.vertices_on_edge)
        .enumerate()
        .map(|(e, (&[c0, c1], &[v0, v1]))| {
            sphere::great_circle_intersection(cell_center[c0], cell_center[c1], vertex_pos[v0], vertex_pos[v1])
                .ok_or_else(|| Error::Geometry(format!("edge {e}: primal and dual arcs do not intersect")))
        })
        .collect()
}

pub fn compute_geometry(
    conn: &Connectivity,
    radius: f64,
    cell_center: &[Vec3],
    vertex_pos: &[Vec3],
    edge_pos: &[Vec3],
) -> Result<Geometry> {
    let r2 = radius * radius;
    let mut edge_length = Vec::with_capacity(conn.n_edges());
    let mut dual_edge_length = Vec::with_capacity(conn.n_edges());
    for e in 0..conn.n_edges() {
        let [v0, v1] = conn.vertices_on_edge[e];
        let [c0, c1] = conn.cells_on_edge[e];
        let l = radius * sphere::arc_angle(vertex_pos[v0], vertex_pos[v1]);
        let d = radius * sphere::arc_angle(cell_center[c0], cell_center[c1]);
        if !(l > 0.0) || !(d > 0.0) {
            return Err(Error::Geometry(format!("edge {e} has zero length (l_e = {l}, d_e = {d})")));
        }
        edge_length.push(l);
        dual_edge_length.push(d);
    }

    let mut kite_area = vec![0.0; conn.vertices_on_cell.len()];
    let mut area_cell = Vec::with_capacity(conn.n_cells());
    for i in 0..conn.n_cells() {
        let (lo, hi) = (conn.cell_offsets[i], conn.cell_offsets[i + 1]);
        let m = hi - lo;
        let xi = cell_center[i];
        let mut sum = 0.0;
        for j in 0..m {
            let v = conn.vertices_on_cell[lo + j];
            let e0 = conn.edges_on_cell[lo + j];
            let e1 = conn.edges_on_cell[lo + (j + 1) % m];
            let xv = vertex_pos[v];
            let a = r2
                * (sphere::signed_triangle_area(xi, edge_pos[e0], xv) + sphere::signed_triangle_area(xi, xv, edge_pos[e1]));
            kite_area[lo + j] = a;
            sum += a;
        }
        if !(sum > 0.0) {
            return Err(Error::Geometry(format!("cell {i} has non-positive area {sum}")));
        }
        area_cell.push(sum);
    }

    let mut kite_on_vertex = vec![[0.0; 3]; conn.n_vertices()];
    for (v, cells) in conn.cells_on_vertex.iter().enumerate() {
        for (k, &c) in cells.iter().enumerate() {
            let range = conn.cell_offsets[c]..conn.cell_offsets[c + 1];
            let slot = conn.vertices_on_cell[range.clone()]
                .iter()
                .position(|&x| x == v)
                .ok_or_else(|| Error::Topology(format!("vertex {v} missing from cell {c}")))?;
            kite_on_vertex[v][k] = kite_area[range.start + slot];
        }
    }
    let area_vertex = kite_on_vertex.iter().map(|k| k[0] + k[1] + k[2]).collect();

    Ok(Geometry {
        edge_length,
        dual_edge_length,
        area_cell,
        area_vertex,
        kite_area,
        kite_on_vertex,
    })
}

/// Sign conventions: the normal `n_e` points out of the higher-numbered cell
/// of `e`, and `t_{e,v} = +1` when `v` lies in the direction `k × n_e`.
pub fn compute_signs(conn: &Connectivity, vertex_pos: &[Vec3], cell_center: &[Vec3]) -> Signs {
    let mut n_sign = Vec::with_capacity(conn.n_edges());
    let mut t_sign = Vec::with_capacity(conn.n_edges());
    for e in 0..conn.n_edges() {
        let [c0, c1] = conn.cells_on_edge[e];
        let ns = if c0 > c1 { [1.0, -1.0] } else { [-1.0, 1.0] };
        let (lo, hi) = (c0.min(c1), c0.max(c1));
        let [v0, v1] = conn.vertices_on_edge[e];
        // Signs come from the edge direction itself so they stay consistent even
        // when the dual arc misses the primal edge on distorted meshes.
        let base = (vertex_pos[v0] + vertex_pos[v1]).normalized();
        let normal = cell_center[lo] - cell_center[hi];
        let tangent = base.cross(normal);
        let s = if (vertex_pos[v0] - vertex_pos[v1]).dot(tangent) > 0.0 { 1.0 } else { -1.0 };
        let ts = [s, -s];
        n_sign.push(ns);
        t_sign.push(ts);
    }

    let mut edge_sign_on_cell = vec![0.0; conn.edges_on_cell.len()];
    for i in 0..conn.n_cells() {
        for slot in conn.cell_offsets[i]..conn.cell_offsets[i + 1] {
            let e = conn.edges_on_cell[slot];
            let k = if conn.cells_on_edge[e][0] == i { 0 } else { 1 };
            edge_sign_on_cell[slot] = n_sign[e][k];
        }
    }
    let t_sign_on_vertex = conn
        .edges_on_vertex
        .iter()
        .enumerate()
        .map(|(v, edges)| {
            edges.map(|e| {
                let k = if conn.vertices_on_edge[e][0] == v { 0 } else { 1 };
                t_sign[e][k]
            })
        })
        .collect();

    Signs {
        n_sign,
        t_sign,
        edge_sign_on_cell,
        t_sign_on_vertex,
    }
}

/// TRiSK weights `w_{e,e'}`, parallel to `edges_on_edge`.
///
/// For `e'` on the shared cell `i*`, the walk goes counterclockwise from `e'`
/// to `e`; `R` sums the kite fractions `A_{i*,v}/A_{i*}` of the vertices
/// passed and `v*` is the last of them (an endpoint of `e`). Then
/// `w = n_{e',i*} t_{e,v*} (R - 1/2)`. Walking clockwise instead yields the
/// same value.
pub fn compute_perp_weights(conn: &Connectivity, geom: &Geometry, signs: &Signs) -> Result<Vec<f64>> {
    let mut weights = Vec::with_capacity(conn.edges_on_edge.len());
    for e in 0..conn.n_edges() {
        for &c in &conn.cells_on_edge[e] {
            let lo = conn.cell_offsets[c];
            let m = conn.cell_offsets[c + 1] - lo;
            let ring = &conn.edges_on_cell[lo..lo + m];
            let b = ring
                .iter()
                .position(|&x| x == e)
                .ok_or_else(|| Error::Invariant(format!("edge {e} not on its cell {c}")))?;
            for step in 1..m {
                // e' sits `step` slots after e; walking on from e' wraps around to e.
                let a = (b + step) % m;
                let passed = (b + m - a) % m;
                let frac: f64 = (0..passed).map(|k| geom.kite_area[lo + (a + k) % m]).sum::<f64>() / geom.area_cell[c];
                let v_star = conn.vertices_on_cell[lo + (b + m - 1) % m];
                let t = if conn.vertices_on_edge[e][0] == v_star {
                    signs.t_sign[e][0]
                } else if conn.vertices_on_edge[e][1] == v_star {
                    signs.t_sign[e][1]
                } else {
                    return Err(Error::Invariant(format!("v* {v_star} is not an endpoint of edge {e}")));
                };
                let n_prime = signs.edge_sign_on_cell[lo + a];
                weights.push(n_prime * t * (frac - 0.5));
            }
        }
    }
    Ok(weights)
}
