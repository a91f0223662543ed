//! METIS-format graph and partition files, and the built-in
//! multi-constraint partitioner.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mesh::VoronoiMesh;
use crate::regions::{RegionClass, RegionMap};

/// One-hot constraint weights `(coarse, fine, interface)`.
pub fn class_triplet(class: RegionClass) -> [u8; 3] {
    match class {
        RegionClass::Coarse => [1, 0, 0],
        RegionClass::Fine => [0, 1, 0],
        RegionClass::Interface => [0, 0, 1],
    }
}

/// Cell adjacency with optional one-hot region weights.
#[derive(Clone, Debug, PartialEq)]
pub struct CellGraph {
    pub adjacency: Vec<Vec<usize>>,
    pub weights: Option<Vec<[u8; 3]>>,
}

impl CellGraph {
    pub fn from_mesh(mesh: &VoronoiMesh, map: Option<&RegionMap>) -> Result<Self> {
        let adjacency = (0..mesh.n_cells()).map(|i| mesh.neighbors_of_cell(i).to_vec()).collect();
        let weights = match map {
            Some(m) if m.cell_label.len() != mesh.n_cells() => {
                return Err(Error::Config("region map does not match the mesh".into()));
            }
            Some(m) => Some(m.cell_label.iter().map(|l| class_triplet(l.class())).collect()),
            None => None,
        };
        Ok(Self { adjacency, weights })
    }

    pub fn n_cells(&self) -> usize {
        self.adjacency.len()
    }

    /// Number of unordered neighbour pairs.
    pub fn n_pairs(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Constraint index per cell (index of the one-hot weight), or 0 when unweighted.
    fn constraint(&self, i: usize) -> usize {
        match &self.weights {
            Some(w) => w[i].iter().position(|&x| x == 1).unwrap_or(0),
            None => 0,
        }
    }

    pub fn to_metis(&self) -> String {
        let mut s = String::new();
        match &self.weights {
            Some(_) => writeln!(s, "{} {} 010 3", self.n_cells(), self.n_pairs()),
            None => writeln!(s, "{} {}", self.n_cells(), self.n_pairs()),
        }
        .unwrap();
        for (i, nbrs) in self.adjacency.iter().enumerate() {
            let mut parts: Vec<String> = Vec::new();
            if let Some(w) = &self.weights {
                parts.extend(w[i].iter().map(|x| x.to_string()));
            }
            parts.extend(nbrs.iter().map(|j| (j + 1).to_string()));
            writeln!(s, "{}", parts.join(" ")).unwrap();
        }
        s
    }
}

/// Writes the METIS graph; with a region map every line starts with the
/// `(coarse, fine, interface)` one-hot triplet.
pub fn write_graph(mesh: &VoronoiMesh, map: Option<&RegionMap>, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, CellGraph::from_mesh(mesh, map)?.to_metis())?;
    Ok(())
}

/// Part labels in `[0, n_parts)`: every constraint class is split into
/// near-equal shares by simultaneous region growing, then boundary cells are
/// moved where that shortens the cut without breaking the balance tolerance.
pub fn partition_multiconstraint(graph: &CellGraph, n_parts: usize, seed: u64) -> Result<Vec<usize>> {
    let n = graph.n_cells();
    if n_parts == 0 {
        return Err(Error::Config("number of parts must be at least 1".into()));
    }
    if n_parts > n {
        return Err(Error::Config(format!("{n_parts} parts requested for {n} cells")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels = vec![usize::MAX; n];
    for c in 0..3 {
        let members: Vec<usize> = (0..n).filter(|&i| graph.constraint(i) == c).collect();
        if members.is_empty() {
            continue;
        }
        if members.len() < n_parts {
            log::warn!("constraint {c} has {} cells for {n_parts} parts; some parts get none", members.len());
        }
        grow(graph, c, &members, n_parts, &mut rng, &mut labels);
        refine(graph, c, &members, n_parts, &mut labels);
    }
    Ok(labels)
}

fn grow(graph: &CellGraph, c: usize, members: &[usize], n_parts: usize, rng: &mut ChaCha8Rng, labels: &mut [usize]) {
    let base = members.len() / n_parts;
    let extra = members.len() % n_parts;
    let target: Vec<usize> = (0..n_parts).map(|p| base + usize::from(p < extra)).collect();
    let same = |j: usize| graph.constraint(j) == c;

    // Seeds: one random member, then repeatedly the member farthest from all seeds.
    let mut seeds = vec![members[rng.gen_range(0..members.len())]];
    let mut dist = vec![usize::MAX; graph.n_cells()];
    while seeds.len() < n_parts.min(members.len()) {
        let last = *seeds.last().unwrap();
        let mut queue = VecDeque::from([last]);
        dist[last] = 0;
        while let Some(i) = queue.pop_front() {
            for &j in &graph.adjacency[i] {
                if same(j) && dist[j] > dist[i] + 1 {
                    dist[j] = dist[i] + 1;
                    queue.push_back(j);
                }
            }
        }
        let next = members
            .iter()
            .copied()
            .filter(|i| !seeds.contains(i))
            .max_by_key(|&i| (dist[i], std::cmp::Reverse(i)))
            .unwrap();
        seeds.push(next);
    }

    let mut size = vec![0usize; n_parts];
    let mut frontier: Vec<VecDeque<usize>> = vec![VecDeque::new(); n_parts];
    let mut assigned = 0;
    let mut cursor = 0;
    let assign = |i: usize, p: usize, labels: &mut [usize], size: &mut [usize], frontier: &mut [VecDeque<usize>]| {
        labels[i] = p;
        size[p] += 1;
        frontier[p].extend(graph.adjacency[i].iter().copied().filter(|&j| same(j) && labels[j] == usize::MAX));
    };
    for (p, &s) in seeds.iter().enumerate() {
        if target[p] > 0 {
            assign(s, p, labels, &mut size, &mut frontier);
            assigned += 1;
        }
    }
    while assigned < members.len() {
        for p in 0..n_parts {
            if size[p] >= target[p] || assigned == members.len() {
                continue;
            }
            let mut pick = None;
            while let Some(j) = frontier[p].pop_front() {
                if labels[j] == usize::MAX {
                    pick = Some(j);
                    break;
                }
            }
            // Frontier exhausted (disconnected class): jump to the lowest free member.
            let i = pick.unwrap_or_else(|| {
                while labels[members[cursor]] != usize::MAX {
                    cursor += 1;
                }
                members[cursor]
            });
            assign(i, p, labels, &mut size, &mut frontier);
            assigned += 1;
        }
    }
}

fn refine(graph: &CellGraph, c: usize, members: &[usize], n_parts: usize, labels: &mut [usize]) {
    let mean = members.len() as f64 / n_parts as f64;
    let max_size = (mean * 1.03).ceil() as usize;
    let min_size = ((mean * 0.97).floor() as usize).max(usize::from(mean >= 1.0));
    let mut size = vec![0usize; n_parts];
    for &i in members {
        size[labels[i]] += 1;
    }
    let mut count = vec![0usize; n_parts];
    for _pass in 0..4 {
        let mut moved = false;
        for &i in members {
            let p = labels[i];
            let nbrs: Vec<usize> = graph.adjacency[i].iter().copied().filter(|&j| graph.constraint(j) == c).collect();
            for &j in &nbrs {
                count[labels[j]] += 1;
            }
            let best = nbrs
                .iter()
                .map(|&j| labels[j])
                .filter(|&q| q != p)
                .max_by_key(|&q| (count[q], std::cmp::Reverse(q)));
            if let Some(q) = best {
                if count[q] > count[p] && size[q] < max_size && size[p] > min_size {
                    labels[i] = q;
                    size[q] += 1;
                    size[p] -= 1;
                    moved = true;
                }
            }
            for &j in &nbrs {
                count[labels[j]] = 0;
            }
            count[p] = 0;
        }
        if !moved {
            break;
        }
    }
}

/// One label per line.
pub fn write_partition_file(labels: &[usize], path: impl AsRef<Path>) -> Result<()> {
    let mut s = String::with_capacity(labels.len() * 3);
    for l in labels {
        writeln!(s, "{l}").unwrap();
    }
    std::fs::write(path, s)?;
    Ok(())
}

/// Reads `n_cells` labels in `[0, n_parts)`, one per line.
pub fn read_partition_file(path: impl AsRef<Path>, n_parts: usize, n_cells: usize) -> Result<Vec<usize>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let mut labels = Vec::with_capacity(n_cells);
    for (k, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let v: usize = t
            .parse()
            .map_err(|_| Error::parse(path, k + 1, format!("`{t}` is not a non-negative integer")))?;
        if v >= n_parts {
            return Err(Error::parse(path, k + 1, format!("label {v} out of range for {n_parts} parts")));
        }
        if labels.len() == n_cells {
            return Err(Error::parse(path, k + 1, format!("more than {n_cells} labels")));
        }
        labels.push(v);
    }
    if labels.len() != n_cells {
        return Err(Error::parse(path, text.lines().count(), format!("{} labels, expected {n_cells}", labels.len())));
    }
    Ok(labels)
}
