//! Local time-stepping regions: fine, two interface bands and coarse cells,
//! the underline-fine layers and the induced edge labels.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mesh::VoronoiMesh;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CellLabel {
    Fine,
    Interface1,
    Interface2,
    Coarse,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum SubLabel {
    #[default]
    None,
    UnderlineF1,
    UnderlineF2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeLabel {
    Fine,
    UnderlineFine,
    Interface1,
    Interface2,
    Coarse,
}

/// Partition class used for blocks: interfaces 1 and 2 are one class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RegionClass {
    Fine,
    Coarse,
    Interface,
}

impl CellLabel {
    pub fn class(self) -> RegionClass {
        match self {
            CellLabel::Fine => RegionClass::Fine,
            CellLabel::Coarse => RegionClass::Coarse,
            CellLabel::Interface1 | CellLabel::Interface2 => RegionClass::Interface,
        }
    }
}

impl EdgeLabel {
    pub fn class(self) -> RegionClass {
        match self {
            EdgeLabel::Fine | EdgeLabel::UnderlineFine => RegionClass::Fine,
            EdgeLabel::Coarse => RegionClass::Coarse,
            EdgeLabel::Interface1 | EdgeLabel::Interface2 => RegionClass::Interface,
        }
    }
}

/// Per-cell and per-edge region labels.
#[derive(Clone, Debug, PartialEq)]
pub struct RegionMap {
    pub cell_label: Vec<CellLabel>,
    pub cell_sublabel: Vec<SubLabel>,
    /// Empty until [`label_edges`] runs.
    pub edge_label: Vec<EdgeLabel>,
    pub interface_width: usize,
}

impl RegionMap {
    pub fn n_cells_with(&self, label: CellLabel) -> usize {
        self.cell_label.iter().filter(|&&l| l == label).count()
    }

    pub fn cells_with(&self, label: CellLabel) -> Vec<usize> {
        (0..self.cell_label.len()).filter(|&i| self.cell_label[i] == label).collect()
    }

    pub fn edges_with(&self, label: EdgeLabel) -> Vec<usize> {
        (0..self.edge_label.len()).filter(|&e| self.edge_label[e] == label).collect()
    }

    pub fn is_underline_fine(&self, i: usize) -> bool {
        self.cell_sublabel[i] != SubLabel::None
    }

    pub fn n_underline_fine(&self) -> usize {
        self.cell_sublabel.iter().filter(|&&s| s != SubLabel::None).count()
    }

    /// `(fine, interface1, interface2, coarse)` cell counts.
    pub fn counts(&self) -> (usize, usize, usize, usize) {
        (
            self.n_cells_with(CellLabel::Fine),
            self.n_cells_with(CellLabel::Interface1),
            self.n_cells_with(CellLabel::Interface2),
            self.n_cells_with(CellLabel::Coarse),
        )
    }
}

/// Cells whose center lies within `radius` (rad) of `(lon, lat)`.
pub fn fine_in_cap(mesh: &VoronoiMesh, center: (f64, f64), radius: f64) -> Vec<bool> {
    let c = crate::mesh::Vec3::from_lon_lat(center.0, center.1);
    mesh.cell_center.iter().map(|&p| crate::mesh::sphere::arc_angle(p, c) <= radius).collect()
}

/// Cells whose diameter `√A_i` is below `ratio` times the largest one.
pub fn fine_by_size(mesh: &VoronoiMesh, ratio: f64) -> Vec<bool> {
    let largest = mesh.area_cell.iter().cloned().fold(0.0, f64::max).sqrt();
    mesh.area_cell.iter().map(|a| a.sqrt() < ratio * largest).collect()
}

/// Hop distance from the nearest fine cell (0 on fine cells, `usize::MAX`
/// when unreachable). Neighbours are visited in ring order, sources in id order.
pub fn distance_from_fine(mesh: &VoronoiMesh, fine: &[bool]) -> Vec<usize> {
    let mut dist = vec![usize::MAX; mesh.n_cells()];
    let mut queue = VecDeque::new();
    for (i, &f) in fine.iter().enumerate() {
        if f {
            dist[i] = 0;
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        for &n in mesh.neighbors_of_cell(i) {
            if dist[n] == usize::MAX {
                dist[n] = dist[i] + 1;
                queue.push_back(n);
            }
        }
    }
    dist
}

/// Labels cells: `Interface1` holds the `width` layers of non-fine cells
/// closest to the fine set, `Interface2` the next `width`, `Coarse` the rest.
pub fn label_cells(mesh: &VoronoiMesh, fine_predicate: impl Fn(usize) -> bool, interface_width: usize) -> Result<RegionMap> {
    if interface_width == 0 {
        return Err(Error::Config("interface width must be at least 1".into()));
    }
    let fine: Vec<bool> = (0..mesh.n_cells()).map(&fine_predicate).collect();
    if !fine.iter().any(|&f| f) {
        return Err(Error::Config("fine predicate selects no cells".into()));
    }
    let dist = distance_from_fine(mesh, &fine);
    let w = interface_width;
    let cell_label: Vec<CellLabel> = dist
        .iter()
        .map(|&d| match d {
            0 => CellLabel::Fine,
            d if d <= w => CellLabel::Interface1,
            d if d <= 2 * w => CellLabel::Interface2,
            _ => CellLabel::Coarse,
        })
        .collect();
    if !cell_label.contains(&CellLabel::Coarse) {
        return Err(Error::Config(format!(
            "interface layers of width {w} leave no coarse cells ({} fine of {})",
            fine.iter().filter(|&&f| f).count(),
            mesh.n_cells()
        )));
    }
    Ok(RegionMap {
        cell_sublabel: vec![SubLabel::None; mesh.n_cells()],
        cell_label,
        edge_label: Vec::new(),
        interface_width,
    })
}

/// Marks the two fine layers closest to interface 1.
pub fn label_underline_fine(mesh: &VoronoiMesh, mut map: RegionMap) -> RegionMap {
    let touches = |i: usize, pred: &dyn Fn(usize) -> bool| mesh.neighbors_of_cell(i).iter().any(|&n| pred(n));
    let mut sub = vec![SubLabel::None; mesh.n_cells()];
    for i in 0..mesh.n_cells() {
        if map.cell_label[i] == CellLabel::Fine && touches(i, &|n| map.cell_label[n] == CellLabel::Interface1) {
            sub[i] = SubLabel::UnderlineF1;
        }
    }
    for i in 0..mesh.n_cells() {
        if map.cell_label[i] == CellLabel::Fine
            && sub[i] == SubLabel::None
            && touches(i, &|n| sub[n] == SubLabel::UnderlineF1)
        {
            sub[i] = SubLabel::UnderlineF2;
        }
    }
    if !sub.contains(&SubLabel::UnderlineF2) {
        log::warn!("second underline-fine layer is empty; the fine region is too thin for third-order accuracy");
    }
    map.cell_sublabel = sub;
    map
}

/// Assigns edges from the fine side outward: each class takes the edges of
/// its cells not already taken.
pub fn label_edges(mesh: &VoronoiMesh, mut map: RegionMap) -> RegionMap {
    let mut label: Vec<Option<EdgeLabel>> = vec![None; mesh.n_edges()];
    let passes: [(EdgeLabel, &dyn Fn(usize) -> bool); 4] = [
        (EdgeLabel::Fine, &|i| map.cell_label[i] == CellLabel::Fine && !map.is_underline_fine(i)),
        (EdgeLabel::UnderlineFine, &|i| map.is_underline_fine(i)),
        (EdgeLabel::Interface1, &|i| map.cell_label[i] == CellLabel::Interface1),
        (EdgeLabel::Interface2, &|i| map.cell_label[i] == CellLabel::Interface2),
    ];
    for (l, select) in passes {
        for i in 0..mesh.n_cells() {
            if select(i) {
                for &e in mesh.edges_of_cell(i) {
                    label[e].get_or_insert(l);
                }
            }
        }
    }
    map.edge_label = label.into_iter().map(|l| l.unwrap_or(EdgeLabel::Coarse)).collect();
    map
}

/// Runs the full labeling pipeline.
pub fn build_region_map(mesh: &VoronoiMesh, fine_predicate: impl Fn(usize) -> bool, interface_width: usize) -> Result<RegionMap> {
    let map = label_cells(mesh, fine_predicate, interface_width)?;
    let map = label_underline_fine(mesh, map);
    Ok(label_edges(mesh, map))
}

/// Builds a map from explicit cell sets, e.g. for degenerate layouts the
/// labeling pipeline never produces. Sets must be a disjoint cover.
pub fn map_from_cell_sets(
    mesh: &VoronoiMesh,
    fine: &[usize],
    interface1: &[usize],
    interface2: &[usize],
    coarse: &[usize],
    interface_width: usize,
) -> Result<RegionMap> {
    let problems = cover_violations(mesh.n_cells(), &[fine, interface1, interface2, coarse]);
    if !problems.is_empty() {
        return Err(Error::Config(problems.join("; ")));
    }
    let mut cell_label = vec![CellLabel::Coarse; mesh.n_cells()];
    for (set, l) in [(fine, CellLabel::Fine), (interface1, CellLabel::Interface1), (interface2, CellLabel::Interface2)] {
        for &i in set {
            cell_label[i] = l;
        }
    }
    let map = RegionMap {
        cell_label,
        cell_sublabel: vec![SubLabel::None; mesh.n_cells()],
        edge_label: Vec::new(),
        interface_width,
    };
    Ok(label_edges(mesh, label_underline_fine(mesh, map)))
}

/// Reports cells covered zero or several times by `sets`.
pub fn cover_violations(n_cells: usize, sets: &[&[usize]]) -> Vec<String> {
    let mut seen = vec![0usize; n_cells];
    let mut out = Vec::new();
    for set in sets {
        for &i in *set {
            if i >= n_cells {
                out.push(format!("cell id {i} out of range"));
            } else {
                seen[i] += 1;
            }
        }
    }
    for (i, &k) in seen.iter().enumerate() {
        match k {
            1 => {}
            0 => out.push(format!("cell {i} has no label")),
            k => out.push(format!("cell {i} carries {k} labels")),
        }
    }
    out
}

/// Counts and invariant violations of a labeled map.
#[derive(Clone, Debug, PartialEq)]
pub struct RegionReport {
    pub n_fine: usize,
    pub n_interface1: usize,
    pub n_interface2: usize,
    pub n_coarse: usize,
    pub n_underline_fine: usize,
    pub violations: Vec<String>,
}

impl RegionReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn validate(mesh: &VoronoiMesh, map: &RegionMap) -> RegionReport {
    let (n_fine, n_interface1, n_interface2, n_coarse) = map.counts();
    let mut report = RegionReport {
        n_fine,
        n_interface1,
        n_interface2,
        n_coarse,
        n_underline_fine: map.n_underline_fine(),
        violations: Vec::new(),
    };
    let v = &mut report.violations;
    if map.cell_label.len() != mesh.n_cells() || map.cell_sublabel.len() != mesh.n_cells() {
        v.push(format!("cell label tables do not have {} entries", mesh.n_cells()));
        return report;
    }
    if map.edge_label.len() != mesh.n_edges() {
        v.push(format!("edge label table does not have {} entries", mesh.n_edges()));
        return report;
    }
    let w = map.interface_width;
    let fine: Vec<bool> = map.cell_label.iter().map(|&l| l == CellLabel::Fine).collect();
    let dist = distance_from_fine(mesh, &fine);
    for (i, (&l, &d)) in map.cell_label.iter().zip(&dist).enumerate() {
        let ok = match l {
            CellLabel::Fine => true,
            CellLabel::Interface1 => (1..=w).contains(&d),
            CellLabel::Interface2 => d > w && d <= 2 * w,
            CellLabel::Coarse => d > 2 * w,
        };
        if !ok {
            let shown = if d == usize::MAX { "unreachable".to_string() } else { d.to_string() };
            v.push(format!("cell {i} labeled {l:?} at distance {shown} from the fine region (width {w})"));
        }
        if l != CellLabel::Fine && map.cell_sublabel[i] != SubLabel::None {
            v.push(format!("cell {i} is underline-fine but labeled {l:?}"));
        }
    }
    let expected = label_edges(mesh, label_underline_fine(mesh, RegionMap { edge_label: Vec::new(), ..map.clone() }));
    for i in 0..mesh.n_cells() {
        if map.cell_label[i] == CellLabel::Fine && expected.cell_sublabel[i] != map.cell_sublabel[i] {
            v.push(format!(
                "cell {i}: sublabel {:?}, expected {:?}",
                map.cell_sublabel[i], expected.cell_sublabel[i]
            ));
        }
    }
    if expected.cell_sublabel == map.cell_sublabel {
        for e in 0..mesh.n_edges() {
            if expected.edge_label[e] != map.edge_label[e] {
                v.push(format!("edge {e}: label {:?}, expected {:?}", map.edge_label[e], expected.edge_label[e]));
            }
        }
    }
    report
}

fn label_code(l: CellLabel) -> u8 {
    match l {
        CellLabel::Fine => 1,
        CellLabel::Coarse => 2,
        CellLabel::Interface1 => 3,
        CellLabel::Interface2 => 4,
    }
}

fn sublabel_code(s: SubLabel) -> u8 {
    match s {
        SubLabel::None => 0,
        SubLabel::UnderlineF1 => 5,
        SubLabel::UnderlineF2 => 7,
    }
}

/// One line per cell: `cell_id label sublabel` with labels 1 fine, 2 coarse,
/// 3 interface 1, 4 interface 2 and sublabels 0, 5 (first underline-fine
/// layer), 7 (second).
pub fn write_region_file(map: &RegionMap, path: impl AsRef<Path>) -> Result<()> {
    let mut s = format!("# cell_id label sublabel (interface width {})\n", map.interface_width);
    for (i, (&l, &sub)) in map.cell_label.iter().zip(&map.cell_sublabel).enumerate() {
        let _ = writeln!(s, "{i} {} {}", label_code(l), sublabel_code(sub));
    }
    std::fs::write(path, s)?;
    Ok(())
}

/// Reads a region file and rebuilds edge labels. The interface width is
/// recovered as the deepest interface-1 layer.
pub fn read_region_file(mesh: &VoronoiMesh, path: impl AsRef<Path>) -> Result<RegionMap> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let mut cell_label = vec![None; mesh.n_cells()];
    let mut cell_sublabel = vec![SubLabel::None; mesh.n_cells()];
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let tok: Vec<&str> = body.split_whitespace().collect();
        if tok.len() != 3 {
            return Err(Error::parse(path, line, format!("expected `cell_id label sublabel`, found `{body}`")));
        }
        let num = |s: &str| s.parse::<usize>().map_err(|_| Error::parse(path, line, format!("`{s}` is not a non-negative integer")));
        let (id, l, sub) = (num(tok[0])?, num(tok[1])?, num(tok[2])?);
        if id >= mesh.n_cells() {
            return Err(Error::parse(path, line, format!("cell id {id} out of range (mesh has {} cells)", mesh.n_cells())));
        }
        if cell_label[id].is_some() {
            return Err(Error::parse(path, line, format!("cell {id} listed twice")));
        }
        cell_label[id] = Some(match l {
            1 => CellLabel::Fine,
            2 | 6 | 8 => CellLabel::Coarse,
            3 => CellLabel::Interface1,
            4 => CellLabel::Interface2,
            _ => return Err(Error::parse(path, line, format!("unknown label {l}"))),
        });
        cell_sublabel[id] = match sub {
            0 => SubLabel::None,
            5 => SubLabel::UnderlineF1,
            7 => SubLabel::UnderlineF2,
            _ => return Err(Error::parse(path, line, format!("unknown sublabel {sub}"))),
        };
    }
    let cell_label: Vec<CellLabel> = cell_label
        .into_iter()
        .enumerate()
        .map(|(i, l)| l.ok_or_else(|| Error::parse(path, text.lines().count(), format!("cell {i} missing"))))
        .collect::<Result<_>>()?;
    let fine: Vec<bool> = cell_label.iter().map(|&l| l == CellLabel::Fine).collect();
    let dist = distance_from_fine(mesh, &fine);
    let interface_width = (0..mesh.n_cells())
        .filter(|&i| cell_label[i] == CellLabel::Interface1)
        .map(|i| dist[i])
        .max()
        .unwrap_or(1)
        .max(1);
    let map = RegionMap {
        cell_label,
        cell_sublabel,
        edge_label: Vec::new(),
        interface_width,
    };
    Ok(label_edges(mesh, map))
}
