use std::collections::HashMap;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::ledger::{WorkLedger, Zone, N_STAGES, N_ZONES};
use crate::mesh::VoronoiMesh;
use crate::operators::{eval_plan, EvalPlan, Scratch, StaticFields};
use crate::regions::{CellLabel, EdgeLabel, RegionMap};

/// Zone sets to evaluate, as bit sets of [`Zone::bit`] for cells and edges.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Mask {
    pub cells: u8,
    pub edges: u8,
}

impl Mask {
    pub const ALL: Mask = Mask { cells: 0x1f, edges: 0x1f };

    /// The same zones for cells and edges.
    pub fn of(zones: &[Zone]) -> Mask {
        let bits = zones.iter().fold(0, |b, z| b | z.bit());
        Mask { cells: bits, edges: bits }
    }

    pub fn is_empty(self) -> bool {
        self.cells == 0 && self.edges == 0
    }
}

/// Zone of every cell and edge, with per-zone index lists.
#[derive(Clone, Debug, PartialEq)]
pub struct Zones {
    pub cell_zone: Vec<Zone>,
    pub edge_zone: Vec<Zone>,
    cell_lists: [Vec<usize>; N_ZONES],
    edge_lists: [Vec<usize>; N_ZONES],
    has_regions: bool,
}

impl Zones {
    /// No regions: everything counts as coarse. Only global schemes accept this.
    pub fn uniform(mesh: &VoronoiMesh) -> Self {
        Self::build(vec![Zone::Coarse; mesh.n_cells()], vec![Zone::Coarse; mesh.n_edges()], false)
    }

    pub fn from_map(mesh: &VoronoiMesh, map: &RegionMap) -> Result<Self> {
        if map.cell_label.len() != mesh.n_cells() || map.edge_label.len() != mesh.n_edges() {
            return Err(Error::Config("region map does not match the mesh (edge labels missing?)".into()));
        }
        let cells = (0..mesh.n_cells())
            .map(|i| match map.cell_label[i] {
                CellLabel::Fine if map.is_underline_fine(i) => Zone::UnderlineFine,
                CellLabel::Fine => Zone::FineInner,
                CellLabel::Interface1 => Zone::Interface1,
                CellLabel::Interface2 => Zone::Interface2,
                CellLabel::Coarse => Zone::Coarse,
            })
            .collect();
        let edges = map
            .edge_label
            .iter()
            .map(|l| match l {
                EdgeLabel::Fine => Zone::FineInner,
                EdgeLabel::UnderlineFine => Zone::UnderlineFine,
                EdgeLabel::Interface1 => Zone::Interface1,
                EdgeLabel::Interface2 => Zone::Interface2,
                EdgeLabel::Coarse => Zone::Coarse,
            })
            .collect();
        Ok(Self::build(cells, edges, true))
    }

    fn build(cell_zone: Vec<Zone>, edge_zone: Vec<Zone>, has_regions: bool) -> Self {
        let mut cell_lists: [Vec<usize>; N_ZONES] = Default::default();
        let mut edge_lists: [Vec<usize>; N_ZONES] = Default::default();
        for (i, &z) in cell_zone.iter().enumerate() {
            cell_lists[z as usize].push(i);
        }
        for (e, &z) in edge_zone.iter().enumerate() {
            edge_lists[z as usize].push(e);
        }
        Self {
            cell_zone,
            edge_zone,
            cell_lists,
            edge_lists,
            has_regions,
        }
    }

    pub fn has_regions(&self) -> bool {
        self.has_regions
    }

    pub fn n_cells_in(&self, zone: Zone) -> usize {
        self.cell_lists[zone as usize].len()
    }

    pub fn n_edges_in(&self, zone: Zone) -> usize {
        self.edge_lists[zone as usize].len()
    }

    /// Cells of the zones in `bits`, zone by zone.
    pub fn cells(&self, bits: u8) -> impl Iterator<Item = usize> + '_ {
        Zone::ALL
            .into_iter()
            .filter(move |z| bits & z.bit() != 0)
            .flat_map(move |z| self.cell_lists[z as usize].iter().copied())
    }

    pub fn edges(&self, bits: u8) -> impl Iterator<Item = usize> + '_ {
        Zone::ALL
            .into_iter()
            .filter(move |z| bits & z.bit() != 0)
            .flat_map(move |z| self.edge_lists[z as usize].iter().copied())
    }

    /// Evaluation plan for the masked targets, optionally restricted to an owned subset.
    pub(crate) fn plan(&self, mesh: &VoronoiMesh, mask: Mask, keep_cell: impl Fn(usize) -> bool, keep_edge: impl Fn(usize) -> bool) -> ZonePlan {
        let cells: Vec<usize> = self.cells(mask.cells).filter(|&i| keep_cell(i)).collect();
        let edges: Vec<usize> = self.edges(mask.edges).filter(|&e| keep_edge(e)).collect();
        let mut cell_counts = [0u64; N_ZONES];
        let mut edge_counts = [0u64; N_ZONES];
        for &i in &cells {
            cell_counts[self.cell_zone[i] as usize] += 1;
        }
        for &e in &edges {
            edge_counts[self.edge_zone[e] as usize] += 1;
        }
        ZonePlan {
            plan: EvalPlan::new(mesh, cells, edges),
            cell_counts,
            edge_counts,
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct ZonePlan {
    pub plan: EvalPlan,
    pub cell_counts: [u64; N_ZONES],
    pub edge_counts: [u64; N_ZONES],
}

impl ZonePlan {
    pub fn charge(&self, ledger: &mut WorkLedger, stage: usize, layers: usize) {
        let l = layers as u64;
        for z in 0..N_ZONES {
            ledger.cell_evals[z][stage] += self.cell_counts[z] * l;
            ledger.edge_evals[z][stage] += self.edge_counts[z] * l;
        }
    }
}

/// Source of right-hand-side evaluations for the integrators.
pub trait TendencyEngine {
    fn zones(&self) -> &Zones;

    /// Writes `dh` on the masked cells and `du` on the masked edges from the
    /// state `(h, u)`. Other entries are unspecified. `stage` (0-based) is
    /// only used for accounting.
    fn eval(&mut self, mask: Mask, stage: usize, h: &[f64], u: &[f64], dh: &mut [f64], du: &mut [f64]) -> Result<()>;

    fn ledger(&self) -> &WorkLedger;

    fn reset_ledger(&mut self);
}

/// Single-threaded engine over the whole mesh.
pub struct SerialEngine<'a> {
    mesh: &'a VoronoiMesh,
    statics: &'a StaticFields,
    zones: Zones,
    layers: usize,
    plans: HashMap<Mask, ZonePlan>,
    scratch: Scratch,
    ledger: WorkLedger,
}

impl<'a> SerialEngine<'a> {
    /// `layers` repeats every kernel that many times (cost only; results are identical).
    pub fn new(mesh: &'a VoronoiMesh, statics: &'a StaticFields, zones: Zones, layers: usize) -> Self {
        Self {
            mesh,
            statics,
            zones,
            layers: layers.max(1),
            plans: HashMap::new(),
            scratch: Scratch::new(mesh),
            ledger: WorkLedger::default(),
        }
    }
}

pub(crate) fn check_stage(stage: usize) -> Result<()> {
    if stage >= N_STAGES {
        return Err(Error::Invariant(format!("stage slot {stage} out of range")));
    }
    Ok(())
}

impl TendencyEngine for SerialEngine<'_> {
    fn zones(&self) -> &Zones {
        &self.zones
    }

    fn eval(&mut self, mask: Mask, stage: usize, h: &[f64], u: &[f64], dh: &mut [f64], du: &mut [f64]) -> Result<()> {
        check_stage(stage)?;
        let start = Instant::now();
        let (mesh, zones) = (self.mesh, &self.zones);
        let zp = self.plans.entry(mask).or_insert_with(|| zones.plan(mesh, mask, |_| true, |_| true));
        if cfg!(debug_assertions) {
            dh.fill(f64::NAN);
            du.fill(f64::NAN);
        }
        for _ in 0..self.layers {
            eval_plan(mesh, self.statics, &zp.plan, h, u, &mut self.scratch, dh, du)?;
        }
        zp.charge(&mut self.ledger, stage, self.layers);
        self.ledger.evaluations += 1;
        self.ledger.wall_time[stage] += start.elapsed().as_secs_f64();
        Ok(())
    }

    fn ledger(&self) -> &WorkLedger {
        &self.ledger
    }

    fn reset_ledger(&mut self) {
        self.ledger = WorkLedger::default();
    }
}
