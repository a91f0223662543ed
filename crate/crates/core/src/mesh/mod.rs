//! Spherical Voronoi primal mesh and Delaunay dual.
//!
//! Cells carry thickness, edges carry normal velocity, vertices carry
//! potential vorticity. All lengths are great-circle distances and all areas
//! are spherical.

mod connectivity;
mod delaunay;
mod generate;
mod geometry;
mod io;
pub mod sphere;

pub use connectivity::{build_connectivity, Connectivity};
pub use generate::{generate_icosphere_mesh, generate_refined_mesh, RefineSpec, MAX_LLOYD_ITERATIONS, MAX_SUBDIVISION_LEVEL};
pub use geometry::{compute_geometry, compute_perp_weights, compute_signs, edge_points, Geometry, Signs};
pub use io::{read_mesh, write_mesh, MESH_MAGIC};
pub use sphere::Vec3;

use crate::error::{Error, Result};

/// Earth-like default radius (m).
pub const DEFAULT_RADIUS: f64 = 6_371_220.0;

/// Immutable Voronoi/Delaunay mesh with every table the TRiSK operators need.
///
/// Per-cell tables are CSR arrays indexed through `cell_offsets`; see
/// [`Connectivity`] for the slot conventions. Positions are unit vectors;
/// lengths and areas are scaled by `radius`.
#[derive(Clone, Debug, PartialEq)]
pub struct VoronoiMesh {
    pub radius: f64,
    pub cell_center: Vec<Vec3>,
    pub vertex_pos: Vec<Vec3>,
    pub edge_pos: Vec<Vec3>,

    pub cell_offsets: Vec<usize>,
    pub edges_on_cell: Vec<usize>,
    pub cells_on_cell: Vec<usize>,
    pub vertices_on_cell: Vec<usize>,
    pub cells_on_edge: Vec<[usize; 2]>,
    pub vertices_on_edge: Vec<[usize; 2]>,
    pub cells_on_vertex: Vec<[usize; 3]>,
    pub edges_on_vertex: Vec<[usize; 3]>,
    pub ee_offsets: Vec<usize>,
    pub edges_on_edge: Vec<usize>,

    pub edge_length: Vec<f64>,
    pub dual_edge_length: Vec<f64>,
    pub area_cell: Vec<f64>,
    pub area_vertex: Vec<f64>,
    pub kite_area: Vec<f64>,
    pub kite_on_vertex: Vec<[f64; 3]>,

    pub n_sign: Vec<[f64; 2]>,
    pub t_sign: Vec<[f64; 2]>,
    pub edge_sign_on_cell: Vec<f64>,
    pub t_sign_on_vertex: Vec<[f64; 3]>,
    pub weights_on_edge: Vec<f64>,
}

impl VoronoiMesh {
    /// Builds the Voronoi mesh dual to a counterclockwise Delaunay
    /// triangulation of unit-sphere generators.
    pub fn from_delaunay(radius: f64, generators: Vec<Vec3>, triangles: &[[usize; 3]]) -> Result<Self> {
        let conn = build_connectivity(generators.len(), triangles)?;
        let vertex_pos: Vec<Vec3> = triangles
            .iter()
            .map(|&[a, b, c]| sphere::circumcenter(generators[a], generators[b], generators[c]))
            .collect();
        let edge_pos = edge_points(&conn, &generators, &vertex_pos)?;
        Self::assemble(radius, generators, vertex_pos, edge_pos, conn)
    }

    /// Computes geometry, signs and weights for fully specified positions.
    pub fn assemble(
        radius: f64,
        cell_center: Vec<Vec3>,
        vertex_pos: Vec<Vec3>,
        edge_pos: Vec<Vec3>,
        conn: Connectivity,
    ) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::Config(format!("sphere radius must be positive, got {radius}")));
        }
        let geom = compute_geometry(&conn, radius, &cell_center, &vertex_pos, &edge_pos)?;
        let signs = compute_signs(&conn, &vertex_pos, &cell_center);
        let weights_on_edge = compute_perp_weights(&conn, &geom, &signs)?;
        let Connectivity {
            cell_offsets,
            edges_on_cell,
            cells_on_cell,
            vertices_on_cell,
            cells_on_edge,
            vertices_on_edge,
            cells_on_vertex,
            edges_on_vertex,
            ee_offsets,
            edges_on_edge,
        } = conn;
        let Geometry {
            edge_length,
            dual_edge_length,
            area_cell,
            area_vertex,
            kite_area,
            kite_on_vertex,
        } = geom;
        let Signs {
            n_sign,
            t_sign,
            edge_sign_on_cell,
            t_sign_on_vertex,
        } = signs;
        Ok(Self {
            radius,
            cell_center,
            vertex_pos,
            edge_pos,
            cell_offsets,
            edges_on_cell,
            cells_on_cell,
            vertices_on_cell,
            cells_on_edge,
            vertices_on_edge,
            cells_on_vertex,
            edges_on_vertex,
            ee_offsets,
            edges_on_edge,
            edge_length,
            dual_edge_length,
            area_cell,
            area_vertex,
            kite_area,
            kite_on_vertex,
            n_sign,
            t_sign,
            edge_sign_on_cell,
            t_sign_on_vertex,
            weights_on_edge,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.cell_center.len()
    }

    pub fn n_edges(&self) -> usize {
        self.cells_on_edge.len()
    }

    pub fn n_vertices(&self) -> usize {
        self.vertex_pos.len()
    }

    /// Slot range of cell `i` in the CSR tables.
    #[inline]
    pub fn cell_slots(&self, i: usize) -> std::ops::Range<usize> {
        self.cell_offsets[i]..self.cell_offsets[i + 1]
    }

    #[inline]
    pub fn edges_of_cell(&self, i: usize) -> &[usize] {
        &self.edges_on_cell[self.cell_slots(i)]
    }

    #[inline]
    pub fn neighbors_of_cell(&self, i: usize) -> &[usize] {
        &self.cells_on_cell[self.cell_slots(i)]
    }

    #[inline]
    pub fn vertices_of_cell(&self, i: usize) -> &[usize] {
        &self.vertices_on_cell[self.cell_slots(i)]
    }

    #[inline]
    pub fn ee_slots(&self, e: usize) -> std::ops::Range<usize> {
        self.ee_offsets[e]..self.ee_offsets[e + 1]
    }

    /// `EE(e)`.
    #[inline]
    pub fn edges_of_edge(&self, e: usize) -> &[usize] {
        &self.edges_on_edge[self.ee_slots(e)]
    }

    /// `n_{e,cell}`; `None` if `cell` does not own `e`.
    pub fn n_sign_of(&self, e: usize, cell: usize) -> Option<f64> {
        let [c0, c1] = self.cells_on_edge[e];
        if cell == c0 {
            Some(self.n_sign[e][0])
        } else if cell == c1 {
            Some(self.n_sign[e][1])
        } else {
            None
        }
    }

    /// `t_{e,vertex}`; `None` if `vertex` is not an endpoint of `e`.
    pub fn t_sign_of(&self, e: usize, vertex: usize) -> Option<f64> {
        let [v0, v1] = self.vertices_on_edge[e];
        if vertex == v0 {
            Some(self.t_sign[e][0])
        } else if vertex == v1 {
            Some(self.t_sign[e][1])
        } else {
            None
        }
    }

    /// `w_{e,e'}`; `None` if `e'` is not in `EE(e)`.
    pub fn weight(&self, e: usize, e_prime: usize) -> Option<f64> {
        self.ee_slots(e)
            .find(|&s| self.edges_on_edge[s] == e_prime)
            .map(|s| self.weights_on_edge[s])
    }

    /// Longitude/latitude of a cell center (radians).
    pub fn cell_lon_lat(&self, i: usize) -> (f64, f64) {
        self.cell_center[i].lon_lat()
    }

    pub fn surface_area(&self) -> f64 {
        4.0 * std::f64::consts::PI * self.radius * self.radius
    }

    /// Checks the structural and metric invariants, returning every violation found.
    pub fn check_invariants(&self) -> Vec<String> {
        let mut out = Vec::new();
        let sphere_area = self.surface_area();
        for e in 0..self.n_edges() {
            let [c0, c1] = self.cells_on_edge[e];
            if c0 == c1 {
                out.push(format!("edge {e}: both sides are cell {c0}"));
            }
            let expected = self.edges_of_cell(c0).len() + self.edges_of_cell(c1).len() - 2;
            if self.edges_of_edge(e).len() != expected {
                out.push(format!("edge {e}: |EE| = {} but expected {expected}", self.edges_of_edge(e).len()));
            }
            if self.n_sign[e][0] != -self.n_sign[e][1] {
                out.push(format!("edge {e}: n signs not opposite"));
            }
            if self.t_sign[e][0] != -self.t_sign[e][1] {
                out.push(format!("edge {e}: t signs not opposite"));
            }
            if !(self.edge_length[e] > 0.0 && self.dual_edge_length[e] > 0.0) {
                out.push(format!("edge {e}: non-positive length"));
            }
            for s in self.ee_slots(e) {
                let ep = self.edges_on_edge[s];
                match self.weight(ep, e) {
                    Some(back) if (self.weights_on_edge[s] + back).abs() <= 1e-12 => {}
                    Some(back) => out.push(format!("w[{e}][{ep}] + w[{ep}][{e}] = {:e}", self.weights_on_edge[s] + back)),
                    None => out.push(format!("edge {ep} in EE({e}) but {e} not in EE({ep})")),
                }
            }
        }
        let mut total_cells = 0.0;
        for i in 0..self.n_cells() {
            let a = self.area_cell[i];
            total_cells += a;
            if !(a > 0.0) {
                out.push(format!("cell {i}: non-positive area {a}"));
            }
            let kites: f64 = self.kite_area[self.cell_slots(i)].iter().sum();
            if ((kites - a) / a).abs() > 1e-12 {
                out.push(format!("cell {i}: kite sum {kites} differs from area {a}"));
            }
            if self.edges_of_cell(i).len() < 3 {
                out.push(format!("cell {i}: fewer than 3 edges"));
            }
        }
        let total_vertices: f64 = self.area_vertex.iter().sum();
        for (name, total) in [("cell", total_cells), ("vertex", total_vertices)] {
            if ((total - sphere_area) / sphere_area).abs() > 1e-10 {
                out.push(format!("{name} areas sum to {total}, sphere area is {sphere_area}"));
            }
        }
        out
    }

    /// Largest over smallest cell area.
    pub fn area_ratio(&self) -> f64 {
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for &a in &self.area_cell {
            lo = lo.min(a);
            hi = hi.max(a);
        }
        hi / lo
    }
}
