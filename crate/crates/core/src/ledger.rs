//! Tendency-evaluation counters, a machine-independent stand-in for CPU time.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;

/// Evaluation zones: the fine interior, the underline-fine layers, the two
/// interface bands and the coarse region.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Zone {
    FineInner = 0,
    UnderlineFine = 1,
    Interface1 = 2,
    Interface2 = 3,
    Coarse = 4,
}

impl Zone {
    pub const ALL: [Zone; 5] = [Zone::FineInner, Zone::UnderlineFine, Zone::Interface1, Zone::Interface2, Zone::Coarse];

    pub fn name(self) -> &'static str {
        match self {
            Zone::FineInner => "fine",
            Zone::UnderlineFine => "underline_fine",
            Zone::Interface1 => "interface1",
            Zone::Interface2 => "interface2",
            Zone::Coarse => "coarse",
        }
    }

    pub fn bit(self) -> u8 {
        1 << self as u8
    }
}

pub const N_ZONES: usize = 5;
/// Stage slots: three SSPRK/LTS stages, four for RK4.
pub const N_STAGES: usize = 4;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct WorkLedger {
    pub cell_evals: [[u64; N_STAGES]; N_ZONES],
    pub edge_evals: [[u64; N_STAGES]; N_ZONES],
    /// Number of engine calls (each may cover several zones).
    pub evaluations: u64,
    /// Seconds spent inside tendency evaluations, per stage slot.
    pub wall_time: [f64; N_STAGES],
}

impl WorkLedger {
    pub fn total_cell_evals(&self) -> u64 {
        self.cell_evals.iter().flatten().sum()
    }

    pub fn total_edge_evals(&self) -> u64 {
        self.edge_evals.iter().flatten().sum()
    }

    pub fn cell_evals_in(&self, zone: Zone) -> u64 {
        self.cell_evals[zone as usize].iter().sum()
    }

    pub fn edge_evals_in(&self, zone: Zone) -> u64 {
        self.edge_evals[zone as usize].iter().sum()
    }

    pub fn merge(&mut self, other: &WorkLedger) {
        for z in 0..N_ZONES {
            for s in 0..N_STAGES {
                self.cell_evals[z][s] += other.cell_evals[z][s];
                self.edge_evals[z][s] += other.edge_evals[z][s];
            }
        }
        for s in 0..N_STAGES {
            self.wall_time[s] += other.wall_time[s];
        }
        self.evaluations += other.evaluations;
    }

    /// `zone,stage,cell_evals,edge_evals` rows followed by totals.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("zone,stage,cell_evals,edge_evals\n");
        for z in Zone::ALL {
            for st in 0..N_STAGES {
                let _ = writeln!(
                    s,
                    "{},{},{},{}",
                    z.name(),
                    st + 1,
                    self.cell_evals[z as usize][st],
                    self.edge_evals[z as usize][st]
                );
            }
        }
        let _ = writeln!(s, "total,all,{},{}", self.total_cell_evals(), self.total_edge_evals());
        s
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}
