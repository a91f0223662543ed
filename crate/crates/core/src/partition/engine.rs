use std::collections::HashMap;
use std::time::Instant;

use super::PartitionPlan;
use crate::error::{Error, Result};
use crate::integrators::{check_stage, Mask, TendencyEngine, ZonePlan, Zones};
use crate::ledger::WorkLedger;
use crate::mesh::VoronoiMesh;
use crate::operators::{eval_plan, Scratch, StaticFields};

/// Per-rank worker state. Field buffers are mesh-sized but only the
/// owned and halo entries are ever filled; everything else stays NaN.
struct Rank {
    blocks: [usize; 3],
    recv_cells: Vec<usize>,
    recv_edges: Vec<usize>,
    in_cell: Vec<bool>,
    in_edge: Vec<bool>,
    h: Vec<f64>,
    u: Vec<f64>,
    dh: Vec<f64>,
    du: Vec<f64>,
    scratch: Scratch,
    plans: HashMap<Mask, [ZonePlan; 3]>,
    ledger: WorkLedger,
}

impl Rank {
    fn new(mesh: &VoronoiMesh, plan: &PartitionPlan, k: usize) -> Self {
        let blocks = plan.blocks_of_rank(k);
        let mut in_cell = vec![false; mesh.n_cells()];
        let mut in_edge = vec![false; mesh.n_edges()];
        for &b in &blocks {
            for &i in plan.owned_cells[b].iter().chain(&plan.halo_cells[b]) {
                in_cell[i] = true;
            }
            for &e in plan.owned_edges[b].iter().chain(&plan.halo_edges[b]) {
                in_edge[e] = true;
            }
        }
        Self {
            blocks,
            recv_cells: (0..mesh.n_cells()).filter(|&i| in_cell[i]).collect(),
            recv_edges: (0..mesh.n_edges()).filter(|&e| in_edge[e]).collect(),
            in_cell,
            in_edge,
            h: vec![f64::NAN; mesh.n_cells()],
            u: vec![f64::NAN; mesh.n_edges()],
            dh: vec![f64::NAN; mesh.n_cells()],
            du: vec![f64::NAN; mesh.n_edges()],
            scratch: Scratch::new(mesh),
            plans: HashMap::new(),
            ledger: WorkLedger::default(),
        }
    }

    /// Block plans for `mask`, checking that every input lies in this rank's owned ∪ halo data.
    fn plans_for(&mut self, mesh: &VoronoiMesh, zones: &Zones, plan: &PartitionPlan, mask: Mask) -> Result<&[ZonePlan; 3]> {
        if !self.plans.contains_key(&mask) {
            let mut out = Vec::with_capacity(3);
            for b in self.blocks {
                let zp = zones.plan(mesh, mask, |i| plan.block_of_cell[i] == b, |e| plan.block_of_edge[e] == b);
                if let Some(i) = zp.plan.input_cells(mesh).into_iter().find(|&i| !self.in_cell[i]) {
                    return Err(Error::Invariant(format!("block {b} reads cell {i} outside its halo")));
                }
                if let Some(e) = zp.plan.input_edges(mesh).into_iter().find(|&e| !self.in_edge[e]) {
                    return Err(Error::Invariant(format!("block {b} reads edge {e} outside its halo")));
                }
                out.push(zp);
            }
            let arr: [ZonePlan; 3] = out.try_into().map_err(|_| Error::Invariant("three blocks per rank".into()))?;
            self.plans.insert(mask, arr);
        }
        Ok(&self.plans[&mask])
    }

    #[allow(clippy::too_many_arguments)]
    fn run(
        &mut self,
        mesh: &VoronoiMesh,
        statics: &StaticFields,
        zones: &Zones,
        plan: &PartitionPlan,
        layers: usize,
        mask: Mask,
        stage: usize,
        h: &[f64],
        u: &[f64],
    ) -> Result<()> {
        // Halo exchange: receive owned and halo values.
        for &i in &self.recv_cells {
            self.h[i] = h[i];
        }
        for &e in &self.recv_edges {
            self.u[e] = u[e];
        }
        self.plans_for(mesh, zones, plan, mask)?;
        let plans = &self.plans[&mask];
        // Blocks are processed one after another.
        for zp in plans {
            for _ in 0..layers {
                eval_plan(mesh, statics, &zp.plan, &self.h, &self.u, &mut self.scratch, &mut self.dh, &mut self.du)?;
            }
            zp.charge(&mut self.ledger, stage, layers);
        }
        Ok(())
    }
}

/// Tendency engine split across emulated ranks, one worker thread per rank.
/// Each rank sees only its owned and halo data, so any result that matches
/// [`crate::integrators::SerialEngine`] demonstrates halo sufficiency.
pub struct PartitionedEngine<'a> {
    mesh: &'a VoronoiMesh,
    statics: &'a StaticFields,
    zones: Zones,
    plan: PartitionPlan,
    layers: usize,
    ranks: Vec<Rank>,
    ledger: WorkLedger,
}

impl<'a> PartitionedEngine<'a> {
    pub fn new(mesh: &'a VoronoiMesh, statics: &'a StaticFields, zones: Zones, plan: PartitionPlan, layers: usize) -> Result<Self> {
        if plan.block_of_cell.len() != mesh.n_cells() || plan.block_of_edge.len() != mesh.n_edges() {
            return Err(Error::Config("partition plan does not match the mesh".into()));
        }
        let ranks = (0..plan.n_ranks).map(|k| Rank::new(mesh, &plan, k)).collect();
        Ok(Self {
            mesh,
            statics,
            zones,
            plan,
            layers: layers.max(1),
            ranks,
            ledger: WorkLedger::default(),
        })
    }

    pub fn plan(&self) -> &PartitionPlan {
        &self.plan
    }

    /// Work done by each rank since the last reset.
    pub fn rank_ledgers(&self) -> Vec<&WorkLedger> {
        self.ranks.iter().map(|r| &r.ledger).collect()
    }
}

impl TendencyEngine for PartitionedEngine<'_> {
    fn zones(&self) -> &Zones {
        &self.zones
    }

    fn eval(&mut self, mask: Mask, stage: usize, h: &[f64], u: &[f64], dh: &mut [f64], du: &mut [f64]) -> Result<()> {
        check_stage(stage)?;
        let start = Instant::now();
        let (mesh, statics, zones, plan, layers) = (self.mesh, self.statics, &self.zones, &self.plan, self.layers);

        let results: Vec<Result<()>> = if self.ranks.len() == 1 {
            vec![self.ranks[0].run(mesh, statics, zones, plan, layers, mask, stage, h, u)]
        } else {
            std::thread::scope(|s| {
                let handles: Vec<_> = self
                    .ranks
                    .iter_mut()
                    .map(|r| s.spawn(move || r.run(mesh, statics, zones, plan, layers, mask, stage, h, u)))
                    .collect();
                handles
                    .into_iter()
                    .map(|hd| hd.join().unwrap_or_else(|_| Err(Error::Invariant("rank worker panicked".into()))))
                    .collect()
            })
        };
        results.into_iter().collect::<Result<Vec<()>>>()?;

        // Gather owned targets.
        if cfg!(debug_assertions) {
            dh.fill(f64::NAN);
            du.fill(f64::NAN);
        }
        for r in &self.ranks {
            let plans = &r.plans[&mask];
            for zp in plans {
                for &i in &zp.plan.cells {
                    dh[i] = r.dh[i];
                }
                for &e in &zp.plan.edges {
                    du[e] = r.du[e];
                }
                zp.charge(&mut self.ledger, stage, layers);
            }
        }
        self.ledger.evaluations += 1;
        self.ledger.wall_time[stage] += start.elapsed().as_secs_f64();
        Ok(())
    }

    fn ledger(&self) -> &WorkLedger {
        &self.ledger
    }

    fn reset_ledger(&mut self) {
        self.ledger = WorkLedger::default();
        for r in &mut self.ranks {
            r.ledger = WorkLedger::default();
        }
    }
}
