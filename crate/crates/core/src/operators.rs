//! TRiSK discrete operators and the shallow-water right-hand side.
//!
//! Every operator is a loop over per-element kernels. Full-mesh and
//! subset evaluations call the same kernels in the same order, so a
//! restricted evaluation is bitwise equal to the full one on its elements.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mesh::VoronoiMesh;

/// One value per cell.
pub type CellField = Vec<f64>;
/// One value per edge.
pub type EdgeField = Vec<f64>;
/// One value per vertex.
pub type VertexField = Vec<f64>;

/// Time-independent inputs of the right-hand side.
#[derive(Clone, Debug, PartialEq)]
pub struct StaticFields {
    /// Bottom topography per cell (m).
    pub b: CellField,
    /// Coriolis parameter per vertex (s⁻¹).
    pub f: VertexField,
    /// Gravity (m/s²).
    pub g: f64,
}

/// `dh/dt` and `du/dt` on explicit subsets. Entries outside the subsets are NaN.
#[derive(Clone, Debug)]
pub struct Tendencies {
    pub dh: CellField,
    pub du: EdgeField,
    pub valid_cells: Vec<usize>,
    pub valid_edges: Vec<usize>,
}

#[inline]
fn flux_at(m: &VoronoiMesh, h: &[f64], u: &[f64], e: usize) -> f64 {
    let [c0, c1] = m.cells_on_edge[e];
    0.5 * (h[c0] + h[c1]) * u[e]
}

#[inline]
fn divergence_at(m: &VoronoiMesh, flux: &[f64], i: usize) -> f64 {
    let mut s = 0.0;
    for slot in m.cell_slots(i) {
        let e = m.edges_on_cell[slot];
        s += m.edge_sign_on_cell[slot] * m.edge_length[e] * flux[e];
    }
    s / m.area_cell[i]
}

#[inline]
fn gradient_at(m: &VoronoiMesh, phi: impl Fn(usize) -> f64, e: usize) -> f64 {
    let [c0, c1] = m.cells_on_edge[e];
    let [n0, n1] = m.n_sign[e];
    (-n0 * phi(c0) - n1 * phi(c1)) / m.dual_edge_length[e]
}

#[inline]
fn kinetic_energy_at(m: &VoronoiMesh, u: &[f64], i: usize) -> f64 {
    let mut s = 0.0;
    for &e in m.edges_of_cell(i) {
        s += m.edge_length[e] * m.dual_edge_length[e] * u[e] * u[e];
    }
    s / (4.0 * m.area_cell[i])
}

#[inline]
fn absolute_vorticity_at(m: &VoronoiMesh, u: &[f64], f: &[f64], v: usize) -> f64 {
    let mut s = 0.0;
    for k in 0..3 {
        let e = m.edges_on_vertex[v][k];
        s += m.t_sign_on_vertex[v][k] * m.dual_edge_length[e] * u[e];
    }
    f[v] + s / m.area_vertex[v]
}

#[inline]
fn vertex_thickness_at(m: &VoronoiMesh, h: &[f64], v: usize) -> f64 {
    let mut s = 0.0;
    for k in 0..3 {
        s += m.kite_on_vertex[v][k] * h[m.cells_on_vertex[v][k]];
    }
    s / m.area_vertex[v]
}

#[inline]
fn pv_at(m: &VoronoiMesh, h: &[f64], u: &[f64], f: &[f64], v: usize) -> Result<f64> {
    let hv = vertex_thickness_at(m, h, v);
    if hv <= 0.0 {
        return Err(Error::DryVertex { vertex: v, thickness: hv });
    }
    Ok(absolute_vorticity_at(m, u, f, v) / hv)
}

#[inline]
fn pv_edge_at(m: &VoronoiMesh, q: &[f64], e: usize) -> f64 {
    let [v0, v1] = m.vertices_on_edge[e];
    0.5 * (q[v0] + q[v1])
}

#[inline]
fn perp_flux_at(m: &VoronoiMesh, flux: &[f64], e: usize) -> f64 {
    let mut s = 0.0;
    for slot in m.ee_slots(e) {
        let ep = m.edges_on_edge[slot];
        s += m.weights_on_edge[slot] * m.edge_length[ep] * flux[ep];
    }
    s / m.dual_edge_length[e]
}

#[inline]
fn pv_flux_at(m: &VoronoiMesh, qe: &[f64], flux: &[f64], e: usize) -> f64 {
    let mut s = 0.0;
    for slot in m.ee_slots(e) {
        let ep = m.edges_on_edge[slot];
        s += m.weights_on_edge[slot] * m.edge_length[ep] * flux[ep] * 0.5 * (qe[e] + qe[ep]);
    }
    s / m.dual_edge_length[e]
}

/// `[h]_{i→e}`: mean of the two adjacent cells.
pub fn thickness_to_edge(m: &VoronoiMesh, h: &[f64]) -> EdgeField {
    (0..m.n_edges())
        .map(|e| {
            let [c0, c1] = m.cells_on_edge[e];
            0.5 * (h[c0] + h[c1])
        })
        .collect()
}

/// `F_e = [h]_{i→e} u_e`.
pub fn thickness_flux(m: &VoronoiMesh, h: &[f64], u: &[f64]) -> EdgeField {
    (0..m.n_edges()).map(|e| flux_at(m, h, u, e)).collect()
}

/// `(1/A_i) Σ n_{e,i} l_e F_e`.
pub fn divergence(m: &VoronoiMesh, flux: &[f64]) -> CellField {
    (0..m.n_cells()).map(|i| divergence_at(m, flux, i)).collect()
}

/// `(1/d_e) Σ -n_{e,i} φ_i`.
pub fn gradient(m: &VoronoiMesh, phi: &[f64]) -> EdgeField {
    (0..m.n_edges()).map(|e| gradient_at(m, |c| phi[c], e)).collect()
}

/// `K_i = (1/4A_i) Σ l_e d_e u_e²`.
pub fn kinetic_energy(m: &VoronoiMesh, u: &[f64]) -> CellField {
    (0..m.n_cells()).map(|i| kinetic_energy_at(m, u, i)).collect()
}

/// `η_v = f_v + (1/A_v) Σ t_{e,v} d_e u_e`.
pub fn absolute_vorticity(m: &VoronoiMesh, u: &[f64], f: &[f64]) -> VertexField {
    (0..m.n_vertices()).map(|v| absolute_vorticity_at(m, u, f, v)).collect()
}

/// Kite-weighted vertex thickness `h_v`.
pub fn vertex_thickness(m: &VoronoiMesh, h: &[f64]) -> VertexField {
    (0..m.n_vertices()).map(|v| vertex_thickness_at(m, h, v)).collect()
}

/// `q_v = η_v / h_v`; fails on the first vertex with `h_v ≤ 0`.
pub fn vorticity_and_pv(m: &VoronoiMesh, h: &[f64], u: &[f64], f: &[f64]) -> Result<VertexField> {
    (0..m.n_vertices()).map(|v| pv_at(m, h, u, f, v)).collect()
}

/// `F_e^⊥ = Σ w_{e,e'} (l_{e'}/d_e) F_{e'}`.
pub fn perp_flux(m: &VoronoiMesh, flux: &[f64]) -> EdgeField {
    (0..m.n_edges()).map(|e| perp_flux_at(m, flux, e)).collect()
}

/// `Σ w_{e,e'} (l_{e'}/d_e) F_{e'} (q̃_e + q̃_{e'})/2` with `q̃_e` the mean of
/// `q` over the two vertices of `e`.
pub fn pv_flux_term(m: &VoronoiMesh, q: &[f64], flux: &[f64]) -> EdgeField {
    let qe: Vec<f64> = (0..m.n_edges()).map(|e| pv_edge_at(m, q, e)).collect();
    (0..m.n_edges()).map(|e| pv_flux_at(m, &qe, flux, e)).collect()
}

/// Elements an evaluation touches: the targets and the supports of every
/// intermediate quantity they need.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EvalPlan {
    pub cells: Vec<usize>,
    pub edges: Vec<usize>,
    flux_edges: Vec<usize>,
    ke_cells: Vec<usize>,
    pv_vertices: Vec<usize>,
    pv_edges: Vec<usize>,
}

fn sorted_unique(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    v.dedup();
    v
}

impl EvalPlan {
    pub fn full(m: &VoronoiMesh) -> Self {
        Self::new(m, (0..m.n_cells()).collect(), (0..m.n_edges()).collect())
    }

    /// Plan for target `cells` and `edges` (any order, duplicates removed).
    pub fn new(m: &VoronoiMesh, cells: Vec<usize>, edges: Vec<usize>) -> Self {
        let cells = sorted_unique(cells);
        let edges = sorted_unique(edges);
        let mut pv_edges = edges.clone();
        for &e in &edges {
            pv_edges.extend_from_slice(m.edges_of_edge(e));
        }
        let pv_edges = sorted_unique(pv_edges);
        let mut flux_edges = pv_edges.clone();
        for &i in &cells {
            flux_edges.extend_from_slice(m.edges_of_cell(i));
        }
        let flux_edges = sorted_unique(flux_edges);
        let ke_cells = sorted_unique(edges.iter().flat_map(|&e| m.cells_on_edge[e]).collect());
        let pv_vertices = sorted_unique(pv_edges.iter().flat_map(|&e| m.vertices_on_edge[e]).collect());
        Self {
            cells,
            edges,
            flux_edges,
            ke_cells,
            pv_vertices,
            pv_edges,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty() && self.edges.is_empty()
    }

    /// Cells whose thickness the evaluation reads.
    pub fn input_cells(&self, m: &VoronoiMesh) -> Vec<usize> {
        let mut v: Vec<usize> = self.cells.clone();
        v.extend(self.flux_edges.iter().flat_map(|&e| m.cells_on_edge[e]));
        v.extend(self.edges.iter().flat_map(|&e| m.cells_on_edge[e]));
        v.extend(self.pv_vertices.iter().flat_map(|&x| m.cells_on_vertex[x]));
        sorted_unique(v)
    }

    /// Edges whose velocity the evaluation reads.
    pub fn input_edges(&self, m: &VoronoiMesh) -> Vec<usize> {
        let mut v = self.flux_edges.clone();
        v.extend(self.ke_cells.iter().flat_map(|&i| m.edges_of_cell(i).iter().copied()));
        v.extend(self.pv_vertices.iter().flat_map(|&x| m.edges_on_vertex[x]));
        sorted_unique(v)
    }
}

/// Full-length scratch arrays reused across evaluations.
#[derive(Clone, Debug)]
pub struct Scratch {
    flux: Vec<f64>,
    ke: Vec<f64>,
    q: Vec<f64>,
    qe: Vec<f64>,
}

impl Scratch {
    pub fn new(m: &VoronoiMesh) -> Self {
        Self {
            flux: vec![f64::NAN; m.n_edges()],
            ke: vec![f64::NAN; m.n_cells()],
            q: vec![f64::NAN; m.n_vertices()],
            qe: vec![f64::NAN; m.n_edges()],
        }
    }
}

/// Evaluates `dh = -∇·F` on `plan.cells` and
/// `du = -F^⊥[q] - g∇(h+b) - ∇K` on `plan.edges`, writing only those entries.
pub fn eval_plan(
    m: &VoronoiMesh,
    s: &StaticFields,
    plan: &EvalPlan,
    h: &[f64],
    u: &[f64],
    scratch: &mut Scratch,
    dh: &mut [f64],
    du: &mut [f64],
) -> Result<()> {
    for &e in &plan.flux_edges {
        scratch.flux[e] = flux_at(m, h, u, e);
    }
    for &i in &plan.ke_cells {
        scratch.ke[i] = kinetic_energy_at(m, u, i);
    }
    for &v in &plan.pv_vertices {
        scratch.q[v] = pv_at(m, h, u, &s.f, v)?;
    }
    for &e in &plan.pv_edges {
        scratch.qe[e] = pv_edge_at(m, &scratch.q, e);
    }
    for &i in &plan.cells {
        dh[i] = -divergence_at(m, &scratch.flux, i);
    }
    for &e in &plan.edges {
        let pv = pv_flux_at(m, &scratch.qe, &scratch.flux, e);
        let grad_height = gradient_at(m, |c| h[c] + s.b[c], e);
        let grad_ke = gradient_at(m, |c| scratch.ke[c], e);
        du[e] = -pv - (s.g * grad_height + grad_ke);
    }
    Ok(())
}

/// Right-hand side on explicit subsets; see [`eval_plan`].
pub fn tendencies(
    m: &VoronoiMesh,
    h: &[f64],
    u: &[f64],
    s: &StaticFields,
    cell_set: &[usize],
    edge_set: &[usize],
) -> Result<Tendencies> {
    let plan = EvalPlan::new(m, cell_set.to_vec(), edge_set.to_vec());
    let mut dh = vec![f64::NAN; m.n_cells()];
    let mut du = vec![f64::NAN; m.n_edges()];
    eval_plan(m, s, &plan, h, u, &mut Scratch::new(m), &mut dh, &mut du)?;
    Ok(Tendencies {
        dh,
        du,
        valid_cells: plan.cells,
        valid_edges: plan.edges,
    })
}

/// Writes `kind,id,value` rows for each non-empty field.
pub fn write_field_dump(
    path: impl AsRef<Path>,
    cells: &[f64],
    edges: &[f64],
    vertices: &[f64],
) -> Result<()> {
    let mut s = String::from("kind,id,value\n");
    for (kind, values) in [("cell", cells), ("edge", edges), ("vertex", vertices)] {
        for (id, x) in values.iter().enumerate() {
            let _ = writeln!(s, "{kind},{id},{x:.16e}");
        }
    }
    std::fs::write(path, s)?;
    Ok(())
}

/// Reads a dump written by [`write_field_dump`] back as `(cells, edges, vertices)`.
/// Ids must appear in order within each kind; `#` lines are skipped.
pub fn read_field_dump(path: impl AsRef<Path>) -> Result<(CellField, EdgeField, VertexField)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let mut out: [Vec<f64>; 3] = Default::default();
    let mut header = false;
    for (k, raw) in text.lines().enumerate() {
        let t = raw.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        if !header {
            if t != "kind,id,value" {
                return Err(Error::parse(path, k + 1, "expected header `kind,id,value`"));
            }
            header = true;
            continue;
        }
        let tok: Vec<&str> = t.split(',').collect();
        if tok.len() != 3 {
            return Err(Error::parse(path, k + 1, format!("expected `kind,id,value`, found `{t}`")));
        }
        let slot = match tok[0] {
            "cell" => 0,
            "edge" => 1,
            "vertex" => 2,
            other => return Err(Error::parse(path, k + 1, format!("unknown kind `{other}`"))),
        };
        let id: usize = tok[1].parse().map_err(|_| Error::parse(path, k + 1, format!("bad id `{}`", tok[1])))?;
        if id != out[slot].len() {
            return Err(Error::parse(path, k + 1, format!("{} id {id} out of order", tok[0])));
        }
        let v: f64 = tok[2].parse().map_err(|_| Error::parse(path, k + 1, format!("bad value `{}`", tok[2])))?;
        out[slot].push(v);
    }
    let [c, e, v] = out;
    Ok((c, e, v))
}
