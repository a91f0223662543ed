//! Region-aware domain decomposition.
//!
//! Every emulated rank `k` owns three blocks, `3k` (fine cells), `3k+1`
//! (coarse cells) and `3k+2` (interface cells), so that each LTS phase only
//! touches region-pure blocks. Blocks carry two layers of halo cells, which
//! is exactly the stencil depth of the tendency operators.

mod engine;
mod graph;

pub use engine::PartitionedEngine;
pub use graph::{class_triplet, partition_multiconstraint, read_partition_file, write_graph, write_partition_file, CellGraph};

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mesh::VoronoiMesh;
use crate::regions::{RegionClass, RegionMap};

/// Block offset within a rank for each region class.
pub fn class_offset(class: RegionClass) -> usize {
    match class {
        RegionClass::Fine => 0,
        RegionClass::Coarse => 1,
        RegionClass::Interface => 2,
    }
}

pub fn class_name(class: RegionClass) -> &'static str {
    match class {
        RegionClass::Fine => "fine",
        RegionClass::Coarse => "coarse",
        RegionClass::Interface => "interface",
    }
}

const CLASSES: [RegionClass; 3] = [RegionClass::Fine, RegionClass::Coarse, RegionClass::Interface];

/// Ownership and halos of `3 × n_ranks` region-pure blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionPlan {
    pub n_ranks: usize,
    pub block_of_cell: Vec<usize>,
    pub block_of_edge: Vec<usize>,
    pub block_region: Vec<RegionClass>,
    pub owned_cells: Vec<Vec<usize>>,
    pub owned_edges: Vec<Vec<usize>>,
    /// Cells within two adjacency hops of the owned cells, minus the owned cells.
    pub halo_cells: Vec<Vec<usize>>,
    /// Edges with both cells in owned ∪ halo, minus the owned edges.
    pub halo_edges: Vec<Vec<usize>>,
}

impl PartitionPlan {
    pub fn n_blocks(&self) -> usize {
        3 * self.n_ranks
    }

    pub fn rank_of_block(&self, b: usize) -> usize {
        b / 3
    }

    pub fn blocks_of_rank(&self, k: usize) -> [usize; 3] {
        [3 * k, 3 * k + 1, 3 * k + 2]
    }
}

/// Routes each cell to block `3k + class` and builds edge ownership and halos.
pub fn make_block_plan(mesh: &VoronoiMesh, map: &RegionMap, rank_labels: &[usize], n_ranks: usize) -> Result<PartitionPlan> {
    if n_ranks == 0 {
        return Err(Error::Config("number of ranks must be at least 1".into()));
    }
    if rank_labels.len() != mesh.n_cells() {
        return Err(Error::Config(format!(
            "rank labels cover {} cells, mesh has {}",
            rank_labels.len(),
            mesh.n_cells()
        )));
    }
    check_map(mesh, map)?;
    if let Some((i, &k)) = rank_labels.iter().enumerate().find(|(_, &k)| k >= n_ranks) {
        return Err(Error::Config(format!("cell {i} has rank {k}, expected < {n_ranks}")));
    }
    let block_of_cell = (0..mesh.n_cells())
        .map(|i| 3 * rank_labels[i] + class_offset(map.cell_label[i].class()))
        .collect();
    let plan = build_plan(mesh, map, n_ranks, block_of_cell);
    for k in 0..n_ranks {
        for b in plan.blocks_of_rank(k) {
            if plan.owned_cells[b].is_empty() {
                log::warn!("rank {k} owns no {} cells; block {b} is empty", class_name(plan.block_region[b]));
            }
        }
    }
    Ok(plan)
}

/// Case C: every interface cell moves to rank 0's interface block.
pub fn concentrate_interface(mesh: &VoronoiMesh, map: &RegionMap, plan: &PartitionPlan) -> PartitionPlan {
    let block_of_cell = plan
        .block_of_cell
        .iter()
        .map(|&b| if b % 3 == 2 { 2 } else { b })
        .collect();
    build_plan(mesh, map, plan.n_ranks, block_of_cell)
}

fn check_map(mesh: &VoronoiMesh, map: &RegionMap) -> Result<()> {
    if map.cell_label.len() != mesh.n_cells() || map.edge_label.len() != mesh.n_edges() {
        return Err(Error::Config("region map does not match the mesh (edge labels missing?)".into()));
    }
    Ok(())
}

fn build_plan(mesh: &VoronoiMesh, map: &RegionMap, n_ranks: usize, block_of_cell: Vec<usize>) -> PartitionPlan {
    let n_blocks = 3 * n_ranks;
    let block_region: Vec<RegionClass> = (0..n_blocks).map(|b| CLASSES[b % 3]).collect();

    // Edge owner: lower-id adjacent cell whose class matches the edge's.
    let block_of_edge: Vec<usize> = (0..mesh.n_edges())
        .map(|e| {
            let class = map.edge_label[e].class();
            let [a, b] = mesh.cells_on_edge[e];
            let (lo, hi) = (a.min(b), a.max(b));
            let owner = [lo, hi].into_iter().find(|&c| map.cell_label[c].class() == class);
            match owner {
                Some(c) => block_of_cell[c],
                None => 3 * (block_of_cell[lo] / 3) + class_offset(class),
            }
        })
        .collect();

    let mut owned_cells = vec![Vec::new(); n_blocks];
    for (i, &b) in block_of_cell.iter().enumerate() {
        owned_cells[b].push(i);
    }
    let mut owned_edges = vec![Vec::new(); n_blocks];
    for (e, &b) in block_of_edge.iter().enumerate() {
        owned_edges[b].push(e);
    }

    let mut halo_cells = Vec::with_capacity(n_blocks);
    let mut halo_edges = Vec::with_capacity(n_blocks);
    let mut mark = vec![usize::MAX; mesh.n_cells()];
    for b in 0..n_blocks {
        let halo = halo_of(mesh, &owned_cells[b], 2, b, &mut mark);
        let edges = (0..mesh.n_edges())
            .filter(|&e| block_of_edge[e] != b && mesh.cells_on_edge[e].iter().all(|&c| mark[c] == b))
            .collect();
        halo_cells.push(halo);
        halo_edges.push(edges);
    }

    PartitionPlan {
        n_ranks,
        block_of_cell,
        block_of_edge,
        block_region,
        owned_cells,
        owned_edges,
        halo_cells,
        halo_edges,
    }
}

/// Cells `1..=depth` hops from `owned`, sorted. On return `mark[c] == tag`
/// for every owned or halo cell.
fn halo_of(mesh: &VoronoiMesh, owned: &[usize], depth: usize, tag: usize, mark: &mut [usize]) -> Vec<usize> {
    for &i in owned {
        mark[i] = tag;
    }
    let mut halo = Vec::new();
    let mut layer: Vec<usize> = owned.to_vec();
    for _ in 0..depth {
        let mut next = Vec::new();
        for &i in &layer {
            for &j in mesh.neighbors_of_cell(i) {
                if mark[j] != tag {
                    mark[j] = tag;
                    next.push(j);
                }
            }
        }
        halo.extend_from_slice(&next);
        layer = next;
    }
    halo.sort_unstable();
    halo
}

/// Purity, coverage and halo-depth violations of `plan` (empty when valid).
pub fn check_plan(mesh: &VoronoiMesh, map: &RegionMap, plan: &PartitionPlan) -> Vec<String> {
    let mut out = Vec::new();
    let n_blocks = plan.n_blocks();
    if plan.block_of_cell.len() != mesh.n_cells() || plan.block_of_edge.len() != mesh.n_edges() {
        out.push("plan does not match the mesh".into());
        return out;
    }
    for (b, cells) in plan.owned_cells.iter().enumerate() {
        if plan.block_region[b] != CLASSES[b % 3] {
            out.push(format!("block {b} has region {:?}", plan.block_region[b]));
        }
        for &i in cells {
            if map.cell_label[i].class() != plan.block_region[b] {
                out.push(format!("block {b} ({:?}) owns cell {i} labelled {:?}", plan.block_region[b], map.cell_label[i]));
            }
        }
    }
    let mut seen = vec![0usize; mesh.n_cells()];
    for (b, cells) in plan.owned_cells.iter().enumerate() {
        for &i in cells {
            seen[i] += 1;
            if plan.block_of_cell[i] != b {
                out.push(format!("cell {i} listed in block {b} but mapped to {}", plan.block_of_cell[i]));
            }
        }
    }
    for (i, &n) in seen.iter().enumerate() {
        if n != 1 {
            out.push(format!("cell {i} owned by {n} blocks"));
        }
    }
    let mut seen = vec![0usize; mesh.n_edges()];
    for cells in &plan.owned_edges {
        for &e in cells {
            seen[e] += 1;
        }
    }
    for (e, &n) in seen.iter().enumerate() {
        if n != 1 {
            out.push(format!("edge {e} owned by {n} blocks"));
        }
    }
    let mut mark = vec![usize::MAX; mesh.n_cells()];
    for b in 0..n_blocks {
        let expect = halo_of(mesh, &plan.owned_cells[b], 2, b, &mut mark);
        if expect != plan.halo_cells[b] {
            out.push(format!("block {b}: halo is not the two-hop neighbourhood"));
        }
    }
    out
}

/// Per-constraint load balance of a plan.
#[derive(Clone, Debug, PartialEq)]
pub struct ImbalanceReport {
    /// `max/mean` of per-rank cell counts for fine, coarse and interface cells.
    pub ratios: [f64; 3],
    /// `max/mean` of per-rank total cell counts.
    pub total_ratio: f64,
    /// Cell counts per rank, in the order fine, coarse, interface.
    pub rank_counts: Vec<[usize; 3]>,
    /// Ranks left without cells of a class that has cells elsewhere; they
    /// sit idle during that class's phase.
    pub idle: Vec<(usize, RegionClass)>,
}

impl ImbalanceReport {
    pub fn ratio(&self, class: RegionClass) -> f64 {
        self.ratios[class_offset(class)]
    }
}

fn max_over_mean(loads: impl Iterator<Item = usize> + Clone, n: usize) -> f64 {
    let total: usize = loads.clone().sum();
    if total == 0 {
        return 1.0;
    }
    let max = loads.max().unwrap_or(0);
    max as f64 * n as f64 / total as f64
}

pub fn imbalance_metrics(plan: &PartitionPlan) -> ImbalanceReport {
    let n = plan.n_ranks;
    let rank_counts: Vec<[usize; 3]> = (0..n)
        .map(|k| {
            let [f, c, i] = plan.blocks_of_rank(k);
            [plan.owned_cells[f].len(), plan.owned_cells[c].len(), plan.owned_cells[i].len()]
        })
        .collect();
    let ratios = [0, 1, 2].map(|j| max_over_mean(rank_counts.iter().map(move |r| r[j]), n));
    let total_ratio = max_over_mean(rank_counts.iter().map(|r| r.iter().sum()), n);
    let mut idle = Vec::new();
    for j in 0..3 {
        let any = rank_counts.iter().any(|r| r[j] > 0);
        for (k, r) in rank_counts.iter().enumerate() {
            if any && r[j] == 0 {
                idle.push((k, CLASSES[j]));
            }
        }
    }
    ImbalanceReport {
        ratios,
        total_ratio,
        rank_counts,
        idle,
    }
}

/// `block,rank,region,owned_cells,owned_edges,halo_cells,halo_edges`.
pub fn plan_summary_csv(plan: &PartitionPlan) -> String {
    let mut s = String::from("block,rank,region,owned_cells,owned_edges,halo_cells,halo_edges\n");
    for b in 0..plan.n_blocks() {
        let _ = writeln!(
            s,
            "{b},{},{},{},{},{},{}",
            plan.rank_of_block(b),
            class_name(plan.block_region[b]),
            plan.owned_cells[b].len(),
            plan.owned_edges[b].len(),
            plan.halo_cells[b].len(),
            plan.halo_edges[b].len()
        );
    }
    s
}

pub fn write_plan_summary(plan: &PartitionPlan, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, plan_summary_csv(plan))?;
    Ok(())
}
