//! Primal/dual connectivity tables built from a counterclockwise triangulation.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Integer incidence tables of a Voronoi mesh and its Delaunay dual.
///
/// Cell-indexed tables are stored in CSR form behind `cell_offsets`. For a
/// cell `i` with slots `j = 0..m`, `cells_on_cell[j]` is the `j`-th neighbor
/// counterclockwise (seen from outside the sphere), `edges_on_cell[j]` the
/// edge shared with it, and `vertices_on_cell[j]` the vertex between edge
/// slots `j` and `j + 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Connectivity {
    pub cell_offsets: Vec<usize>,
    pub edges_on_cell: Vec<usize>,
    pub cells_on_cell: Vec<usize>,
    pub vertices_on_cell: Vec<usize>,
    pub cells_on_edge: Vec<[usize; 2]>,
    pub vertices_on_edge: Vec<[usize; 2]>,
    pub cells_on_vertex: Vec<[usize; 3]>,
    pub edges_on_vertex: Vec<[usize; 3]>,
    /// For edge `e` with cells `[c0, c1]`: the other edges of `c0` walked
    /// counterclockwise starting after `e`, then those of `c1`.
    pub ee_offsets: Vec<usize>,
    pub edges_on_edge: Vec<usize>,
}

impl Connectivity {
    pub fn n_cells(&self) -> usize {
        self.cell_offsets.len() - 1
    }

    pub fn n_edges(&self) -> usize {
        self.cells_on_edge.len()
    }

    pub fn n_vertices(&self) -> usize {
        self.cells_on_vertex.len()
    }

    /// Rebuilds `edges_on_edge` from the other tables.
    pub(crate) fn rebuild_edges_on_edge(&mut self) -> Result<()> {
        let mut offsets = Vec::with_capacity(self.n_edges() + 1);
        let mut list = Vec::new();
        offsets.push(0);
        for e in 0..self.n_edges() {
            for &c in &self.cells_on_edge[e] {
                let range = self.cell_offsets[c]..self.cell_offsets[c + 1];
                let ring = &self.edges_on_cell[range];
                let m = ring.len();
                let b = ring.iter().position(|&x| x == e).ok_or_else(|| {
                    Error::Topology(format!("edge {e} is not listed on its cell {c}"))
                })?;
                list.extend((1..m).map(|k| ring[(b + k) % m]));
            }
            offsets.push(list.len());
        }
        self.ee_offsets = offsets;
        self.edges_on_edge = list;
        Ok(())
    }
}

/// Builds all connectivity tables from a triangulation of the sphere whose
/// faces are oriented counterclockwise when viewed from outside.
///
/// Triangle `t` becomes primal vertex `t`. Edges are numbered by visiting
/// cells in ascending id and their neighbors counterclockwise, creating an
/// edge the first time a pair is seen.
pub fn build_connectivity(n_cells: usize, triangles: &[[usize; 3]]) -> Result<Connectivity> {
    let mut half_edges: HashMap<(usize, usize), usize> = HashMap::with_capacity(3 * triangles.len());
    // around cell a: neighbor b is followed counterclockwise by c (from triangle (a, b, c))
    let mut fan: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n_cells];
    for (t, tri) in triangles.iter().enumerate() {
        for k in 0..3 {
            let (a, b, c) = (tri[k], tri[(k + 1) % 3], tri[(k + 2) % 3]);
            if a >= n_cells || a == b || a == c {
                return Err(Error::Topology(format!("triangle {t} is degenerate: {tri:?}")));
            }
            if half_edges.insert((a, b), t).is_some() {
                return Err(Error::Topology(format!(
                    "non-manifold edge between cells {} and {}: more than two incident vertices",
                    a.min(b),
                    a.max(b)
                )));
            }
            fan[a].push((b, c));
        }
    }
    for &(a, b) in half_edges.keys() {
        if !half_edges.contains_key(&(b, a)) {
            return Err(Error::Topology(format!(
                "open edge between cells {} and {}: only one incident vertex",
                a.min(b),
                a.max(b)
            )));
        }
    }

    let mut cell_offsets = Vec::with_capacity(n_cells + 1);
    let mut cells_on_cell = Vec::with_capacity(6 * n_cells);
    cell_offsets.push(0);
    for (i, star) in fan.iter_mut().enumerate() {
        if star.len() < 3 {
            return Err(Error::Topology(format!(
                "cell {i} has {} edges; a Voronoi cell needs at least 3",
                star.len()
            )));
        }
        star.sort_unstable();
        let next = |b: usize| star.binary_search_by_key(&b, |p| p.0).ok().map(|k| star[k].1);
        let start = star[0].0;
        let mut cur = start;
        let mut ring = Vec::with_capacity(star.len());
        loop {
            ring.push(cur);
            cur = next(cur).ok_or_else(|| Error::Topology(format!("cell {i}: broken vertex fan")))?;
            if cur == start {
                break;
            }
            if ring.len() > star.len() {
                return Err(Error::Topology(format!("cell {i}: vertex fan does not close")));
            }
        }
        if ring.len() != star.len() {
            return Err(Error::Topology(format!(
                "cell {i}: neighborhood is not a single disk ({} of {} triangles reached)",
                ring.len(),
                star.len()
            )));
        }
        cells_on_cell.extend_from_slice(&ring);
        cell_offsets.push(cells_on_cell.len());
    }

    let mut edge_id: HashMap<(usize, usize), usize> = HashMap::with_capacity(half_edges.len() / 2);
    let mut cells_on_edge = Vec::with_capacity(half_edges.len() / 2);
    let mut vertices_on_edge = Vec::with_capacity(half_edges.len() / 2);
    let mut edges_on_cell = vec![0; cells_on_cell.len()];
    let mut vertices_on_cell = vec![0; cells_on_cell.len()];
    for i in 0..n_cells {
        for slot in cell_offsets[i]..cell_offsets[i + 1] {
            let nb = cells_on_cell[slot];
            let key = (i.min(nb), i.max(nb));
            let e = *edge_id.entry(key).or_insert_with(|| {
                cells_on_edge.push([i, nb]);
                vertices_on_edge.push([half_edges[&(i, nb)], half_edges[&(nb, i)]]);
                cells_on_edge.len() - 1
            });
            edges_on_cell[slot] = e;
            vertices_on_cell[slot] = half_edges[&(i, nb)];
        }
    }

    let cells_on_vertex: Vec<[usize; 3]> = triangles.to_vec();
    let edges_on_vertex = triangles
        .iter()
        .map(|&[a, b, c]| {
            let id = |p: usize, q: usize| edge_id[&(p.min(q), p.max(q))];
            [id(a, b), id(b, c), id(c, a)]
        })
        .collect();

    let mut conn = Connectivity {
        cell_offsets,
        edges_on_cell,
        cells_on_cell,
        vertices_on_cell,
        cells_on_edge,
        vertices_on_edge,
        cells_on_vertex,
        edges_on_vertex,
        ee_offsets: Vec::new(),
        edges_on_edge: Vec::new(),
    };
    conn.rebuild_edges_on_edge()?;
    Ok(conn)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Tetrahedron, faces counterclockwise from outside.
    fn tetra() -> Vec<[usize; 3]> {
        vec![[0, 1, 2], [0, 3, 1], [1, 3, 2], [0, 2, 3]]
    }

    #[test]
    fn tetrahedron_tables() {
        let c = build_connectivity(4, &tetra()).unwrap();
        assert_eq!(c.n_edges(), 6);
        assert_eq!(c.n_vertices(), 4);
        for i in 0..4 {
            assert_eq!(c.cell_offsets[i + 1] - c.cell_offsets[i], 3);
        }
        for e in 0..6 {
            assert_eq!(c.ee_offsets[e + 1] - c.ee_offsets[e], 3 + 3 - 2);
        }
    }

    #[test]
    fn vertex_slot_sits_between_consecutive_edges() {
        let c = build_connectivity(4, &tetra()).unwrap();
        for i in 0..4 {
            let r = c.cell_offsets[i]..c.cell_offsets[i + 1];
            let m = r.len();
            for j in 0..m {
                let v = c.vertices_on_cell[r.start + j];
                let e0 = c.edges_on_cell[r.start + j];
                let e1 = c.edges_on_cell[r.start + (j + 1) % m];
                assert!(c.vertices_on_edge[e0].contains(&v));
                assert!(c.vertices_on_edge[e1].contains(&v));
            }
        }
    }

    #[test]
    fn open_surface_is_rejected() {
        let mut t = tetra();
        t.pop();
        let err = build_connectivity(4, &t).unwrap_err();
        assert!(matches!(err, Error::Topology(_)), "{err}");
    }

    #[test]
    fn duplicated_face_is_non_manifold() {
        let mut t = tetra();
        t.push([0, 1, 2]);
        assert!(matches!(build_connectivity(4, &t), Err(Error::Topology(_))));
    }
}
