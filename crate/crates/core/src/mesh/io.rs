//! `MSWM1` text mesh format.
//!
//! ```text
//! MSWM1 <n_cells> <n_edges> <n_vertices> <radius>
//! @cells          id x y z
//! @edges          id x y z n_c c.. n_v v..        (n_c = n_v = 2)
//! @vertices       id x y z c0 c1 c2 e0 e1 e2
//! @connectivity   id m e_0..e_{m-1} c_0..c_{m-1} v_0..v_{m-1}   (counterclockwise)
//! @geometry       cell id area kite_0..kite_{m-1}
//!                 edge id l_e d_e
//!                 vertex id area
//! @weights        id count e'_0 w_0 .. e'_{count-1} w_{count-1}
//! ```
//!
//! Positions are unit vectors, ids are 0-based, floats carry 17 significant
//! digits so every value reads back bit-identical. Lines starting with `#`
//! are comments. Sign tables are derived from positions on load.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use super::connectivity::Connectivity;
use super::geometry::{compute_signs, Geometry};
use super::sphere::Vec3;
use super::VoronoiMesh;
use crate::error::{Error, Result};

pub const MESH_MAGIC: &str = "MSWM1";

fn f(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_mesh(mesh: &VoronoiMesh, path: impl AsRef<Path>) -> Result<()> {
    let mut s = String::new();
    let p = |s: &mut String, v: Vec3| {
        let _ = write!(s, " {} {} {}", f(v.x), f(v.y), f(v.z));
    };
    let _ = writeln!(
        s,
        "{MESH_MAGIC} {} {} {} {}",
        mesh.n_cells(),
        mesh.n_edges(),
        mesh.n_vertices(),
        f(mesh.radius)
    );
    s.push_str("@cells\n# id x y z\n");
    for (i, &c) in mesh.cell_center.iter().enumerate() {
        let _ = write!(s, "{i}");
        p(&mut s, c);
        s.push('\n');
    }
    s.push_str("@edges\n# id x y z n_cells cells.. n_vertices vertices..\n");
    for e in 0..mesh.n_edges() {
        let _ = write!(s, "{e}");
        p(&mut s, mesh.edge_pos[e]);
        let [c0, c1] = mesh.cells_on_edge[e];
        let [v0, v1] = mesh.vertices_on_edge[e];
        let _ = writeln!(s, " 2 {c0} {c1} 2 {v0} {v1}");
    }
    s.push_str("@vertices\n# id x y z cells(3) edges(3)\n");
    for v in 0..mesh.n_vertices() {
        let _ = write!(s, "{v}");
        p(&mut s, mesh.vertex_pos[v]);
        let [c0, c1, c2] = mesh.cells_on_vertex[v];
        let [e0, e1, e2] = mesh.edges_on_vertex[v];
        let _ = writeln!(s, " {c0} {c1} {c2} {e0} {e1} {e2}");
    }
    s.push_str("@connectivity\n# id m edges(m) cells(m) vertices(m)\n");
    for i in 0..mesh.n_cells() {
        let r = mesh.cell_slots(i);
        let _ = write!(s, "{i} {}", r.len());
        for table in [&mesh.edges_on_cell, &mesh.cells_on_cell, &mesh.vertices_on_cell] {
            for &x in &table[r.clone()] {
                let _ = write!(s, " {x}");
            }
        }
        s.push('\n');
    }
    s.push_str("@geometry\n");
    for i in 0..mesh.n_cells() {
        let _ = write!(s, "cell {i} {}", f(mesh.area_cell[i]));
        for &k in &mesh.kite_area[mesh.cell_slots(i)] {
            let _ = write!(s, " {}", f(k));
        }
        s.push('\n');
    }
    for e in 0..mesh.n_edges() {
        let _ = writeln!(s, "edge {e} {} {}", f(mesh.edge_length[e]), f(mesh.dual_edge_length[e]));
    }
    for v in 0..mesh.n_vertices() {
        let _ = writeln!(s, "vertex {v} {}", f(mesh.area_vertex[v]));
    }
    s.push_str("@weights\n# id count (edge weight)..\n");
    for e in 0..mesh.n_edges() {
        let r = mesh.ee_slots(e);
        let _ = write!(s, "{e} {}", r.len());
        for k in r {
            let _ = write!(s, " {} {}", mesh.edges_on_edge[k], f(mesh.weights_on_edge[k]));
        }
        s.push('\n');
    }
    let mut file = fs::File::create(path)?;
    file.write_all(s.as_bytes())?;
    Ok(())
}

struct Lines<'a> {
    path: &'a Path,
    inner: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
    last: usize,
}

struct Row<'a> {
    line: usize,
    tokens: Vec<&'a str>,
}

impl<'a> Lines<'a> {
    fn next_row(&mut self) -> Option<Row<'a>> {
        for (n, raw) in self.inner.by_ref() {
            self.last = n + 1;
            let t = raw.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            return Some(Row {
                line: n + 1,
                tokens: t.split_whitespace().collect(),
            });
        }
        None
    }

    fn row(&mut self, what: &str) -> Result<Row<'a>> {
        let last = self.last;
        self.next_row()
            .ok_or_else(|| Error::parse(self.path, last + 1, format!("unexpected end of file while reading {what}")))
    }

    fn section(&mut self, name: &str) -> Result<()> {
        let row = self.row(name)?;
        if row.tokens != [name] {
            return Err(Error::parse(self.path, row.line, format!("expected section `{name}`, found `{}`", row.tokens.join(" "))));
        }
        Ok(())
    }

    fn err(&self, line: usize, msg: impl Into<String>) -> Error {
        Error::parse(self.path, line, msg)
    }
}

impl Row<'_> {
    fn need(&self, n: usize, lines: &Lines) -> Result<()> {
        if self.tokens.len() < n {
            return Err(lines.err(self.line, format!("expected at least {n} fields, found {}", self.tokens.len())));
        }
        Ok(())
    }

    fn int(&self, k: usize, lines: &Lines) -> Result<usize> {
        self.tokens
            .get(k)
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| lines.err(self.line, format!("field {} is not a non-negative integer", k + 1)))
    }

    fn float(&self, k: usize, lines: &Lines) -> Result<f64> {
        self.tokens
            .get(k)
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| lines.err(self.line, format!("field {} is not a number", k + 1)))
    }

    fn vec3(&self, k: usize, lines: &Lines) -> Result<Vec3> {
        Ok(Vec3::new(self.float(k, lines)?, self.float(k + 1, lines)?, self.float(k + 2, lines)?))
    }

    fn id(&self, expected: usize, lines: &Lines) -> Result<()> {
        let id = self.int(0, lines)?;
        if id != expected {
            return Err(lines.err(self.line, format!("expected id {expected}, found {id}")));
        }
        Ok(())
    }
}

/// Reads an `MSWM1` file. Nothing is returned unless the whole file parses
/// and describes a closed mesh.
pub fn read_mesh(path: impl AsRef<Path>) -> Result<VoronoiMesh> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let mut lines = Lines {
        path,
        inner: text.lines().enumerate().peekable(),
        last: 0,
    };

    let head = lines.row("header")?;
    match head.tokens.first() {
        Some(&MESH_MAGIC) => {}
        Some(tok) if tok.starts_with("MSWM") => {
            return Err(Error::Version {
                expected: MESH_MAGIC.into(),
                found: tok.to_string(),
            })
        }
        _ => return Err(lines.err(head.line, "missing MSWM1 header")),
    }
    head.need(5, &lines)?;
    let n_cells = head.int(1, &lines)?;
    let n_edges = head.int(2, &lines)?;
    let n_vertices = head.int(3, &lines)?;
    let radius = head.float(4, &lines)?;
    let check = |x: usize, n: usize, what: &str, line: usize, lines: &Lines| -> Result<usize> {
        if x >= n {
            Err(lines.err(line, format!("{what} id {x} out of range (count {n})")))
        } else {
            Ok(x)
        }
    };

    lines.section("@cells")?;
    let mut cell_center = Vec::with_capacity(n_cells);
    for i in 0..n_cells {
        let r = lines.row("@cells")?;
        r.need(4, &lines)?;
        r.id(i, &lines)?;
        cell_center.push(r.vec3(1, &lines)?);
    }

    lines.section("@edges")?;
    let mut edge_pos = Vec::with_capacity(n_edges);
    let mut cells_on_edge = Vec::with_capacity(n_edges);
    let mut vertices_on_edge = Vec::with_capacity(n_edges);
    for e in 0..n_edges {
        let r = lines.row("@edges")?;
        r.need(5, &lines)?;
        r.id(e, &lines)?;
        edge_pos.push(r.vec3(1, &lines)?);
        let nc = r.int(4, &lines)?;
        if nc != 2 {
            return Err(Error::Topology(format!("edge {e} has {nc} cells; a closed sphere needs exactly 2")));
        }
        r.need(5 + nc + 1, &lines)?;
        let nv = r.int(5 + nc, &lines)?;
        if nv != 2 {
            return Err(Error::Topology(format!("edge {e} has {nv} vertices; expected 2")));
        }
        r.need(5 + nc + 1 + nv, &lines)?;
        let c0 = check(r.int(5, &lines)?, n_cells, "cell", r.line, &lines)?;
        let c1 = check(r.int(6, &lines)?, n_cells, "cell", r.line, &lines)?;
        if c0 == c1 {
            return Err(Error::Topology(format!("edge {e} has the same cell {c0} on both sides")));
        }
        let v0 = check(r.int(8, &lines)?, n_vertices, "vertex", r.line, &lines)?;
        let v1 = check(r.int(9, &lines)?, n_vertices, "vertex", r.line, &lines)?;
        cells_on_edge.push([c0, c1]);
        vertices_on_edge.push([v0, v1]);
    }

    lines.section("@vertices")?;
    let mut vertex_pos = Vec::with_capacity(n_vertices);
    let mut cells_on_vertex = Vec::with_capacity(n_vertices);
    let mut edges_on_vertex = Vec::with_capacity(n_vertices);
    for v in 0..n_vertices {
        let r = lines.row("@vertices")?;
        r.need(10, &lines)?;
        r.id(v, &lines)?;
        vertex_pos.push(r.vec3(1, &lines)?);
        let mut c = [0; 3];
        let mut ed = [0; 3];
        for k in 0..3 {
            c[k] = check(r.int(4 + k, &lines)?, n_cells, "cell", r.line, &lines)?;
            ed[k] = check(r.int(7 + k, &lines)?, n_edges, "edge", r.line, &lines)?;
        }
        cells_on_vertex.push(c);
        edges_on_vertex.push(ed);
    }

    lines.section("@connectivity")?;
    let mut cell_offsets = vec![0];
    let (mut edges_on_cell, mut cells_on_cell, mut vertices_on_cell) = (Vec::new(), Vec::new(), Vec::new());
    for i in 0..n_cells {
        let r = lines.row("@connectivity")?;
        r.need(2, &lines)?;
        r.id(i, &lines)?;
        let m = r.int(1, &lines)?;
        if m < 3 {
            return Err(Error::Topology(format!("cell {i} has {m} edges; at least 3 required")));
        }
        r.need(2 + 3 * m, &lines)?;
        for k in 0..m {
            edges_on_cell.push(check(r.int(2 + k, &lines)?, n_edges, "edge", r.line, &lines)?);
            cells_on_cell.push(check(r.int(2 + m + k, &lines)?, n_cells, "cell", r.line, &lines)?);
            vertices_on_cell.push(check(r.int(2 + 2 * m + k, &lines)?, n_vertices, "vertex", r.line, &lines)?);
        }
        cell_offsets.push(edges_on_cell.len());
    }

    lines.section("@geometry")?;
    let mut area_cell = Vec::with_capacity(n_cells);
    let mut kite_area = Vec::with_capacity(edges_on_cell.len());
    for i in 0..n_cells {
        let r = lines.row("@geometry")?;
        let m = cell_offsets[i + 1] - cell_offsets[i];
        r.need(3 + m, &lines)?;
        if r.tokens[0] != "cell" {
            return Err(lines.err(r.line, "expected `cell` geometry row"));
        }
        if r.int(1, &lines)? != i {
            return Err(lines.err(r.line, format!("expected cell {i}")));
        }
        area_cell.push(r.float(2, &lines)?);
        for k in 0..m {
            kite_area.push(r.float(3 + k, &lines)?);
        }
    }
    let mut edge_length = Vec::with_capacity(n_edges);
    let mut dual_edge_length = Vec::with_capacity(n_edges);
    for e in 0..n_edges {
        let r = lines.row("@geometry")?;
        r.need(4, &lines)?;
        if r.tokens[0] != "edge" || r.int(1, &lines)? != e {
            return Err(lines.err(r.line, format!("expected `edge {e}` geometry row")));
        }
        edge_length.push(r.float(2, &lines)?);
        dual_edge_length.push(r.float(3, &lines)?);
    }
    let mut area_vertex = Vec::with_capacity(n_vertices);
    for v in 0..n_vertices {
        let r = lines.row("@geometry")?;
        r.need(3, &lines)?;
        if r.tokens[0] != "vertex" || r.int(1, &lines)? != v {
            return Err(lines.err(r.line, format!("expected `vertex {v}` geometry row")));
        }
        area_vertex.push(r.float(2, &lines)?);
    }

    lines.section("@weights")?;
    let mut ee_offsets = vec![0];
    let mut edges_on_edge = Vec::new();
    let mut weights_on_edge = Vec::new();
    for e in 0..n_edges {
        let r = lines.row("@weights")?;
        r.need(2, &lines)?;
        r.id(e, &lines)?;
        let count = r.int(1, &lines)?;
        r.need(2 + 2 * count, &lines)?;
        for k in 0..count {
            edges_on_edge.push(check(r.int(2 + 2 * k, &lines)?, n_edges, "edge", r.line, &lines)?);
            weights_on_edge.push(r.float(3 + 2 * k, &lines)?);
        }
        ee_offsets.push(edges_on_edge.len());
    }

    let conn = Connectivity {
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
    };
    verify_incidence(&conn)?;

    let mut kite_on_vertex = vec![[0.0; 3]; n_vertices];
    for (v, cells) in conn.cells_on_vertex.iter().enumerate() {
        for (k, &c) in cells.iter().enumerate() {
            let range = conn.cell_offsets[c]..conn.cell_offsets[c + 1];
            let slot = conn.vertices_on_cell[range.clone()]
                .iter()
                .position(|&x| x == v)
                .ok_or_else(|| Error::Topology(format!("vertex {v} lists cell {c}, which does not list it back")))?;
            kite_on_vertex[v][k] = kite_area[range.start + slot];
        }
    }
    let geom = Geometry {
        edge_length,
        dual_edge_length,
        area_cell,
        area_vertex,
        kite_area,
        kite_on_vertex,
    };
    let signs = compute_signs(&conn, &vertex_pos, &cell_center);
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
    Ok(VoronoiMesh {
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
        edge_length: geom.edge_length,
        dual_edge_length: geom.dual_edge_length,
        area_cell: geom.area_cell,
        area_vertex: geom.area_vertex,
        kite_area: geom.kite_area,
        kite_on_vertex: geom.kite_on_vertex,
        n_sign: signs.n_sign,
        t_sign: signs.t_sign,
        edge_sign_on_cell: signs.edge_sign_on_cell,
        t_sign_on_vertex: signs.t_sign_on_vertex,
        weights_on_edge,
    })
}

/// Cross-checks the redundant incidence tables of a loaded mesh.
fn verify_incidence(conn: &Connectivity) -> Result<()> {
    let mut seen = vec![0usize; conn.n_edges()];
    for i in 0..conn.n_cells() {
        for slot in conn.cell_offsets[i]..conn.cell_offsets[i + 1] {
            let e = conn.edges_on_cell[slot];
            let [c0, c1] = conn.cells_on_edge[e];
            let other = if c0 == i {
                c1
            } else if c1 == i {
                c0
            } else {
                return Err(Error::Topology(format!("cell {i} lists edge {e}, which does not list it back")));
            };
            if conn.cells_on_cell[slot] != other {
                return Err(Error::Topology(format!("cell {i}: neighbor across edge {e} should be {other}")));
            }
            seen[e] += 1;
        }
    }
    if let Some(e) = seen.iter().position(|&n| n != 2) {
        return Err(Error::Topology(format!("edge {e} appears on {} cells", seen[e])));
    }
    let mut rebuilt = conn.clone();
    rebuilt.rebuild_edges_on_edge()?;
    if rebuilt.ee_offsets != conn.ee_offsets || rebuilt.edges_on_edge != conn.edges_on_edge {
        return Err(Error::Topology("edges-on-edge table does not match cell rings".into()));
    }
    Ok(())
}
