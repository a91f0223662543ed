//! Time integrators: SSPRK2/3, classical RK4 and the LTS2/LTS3 local
//! time-stepping schemes.
//!
//! Integrators never call the operators directly. They ask a
//! [`TendencyEngine`] for tendencies on a [`Mask`] of zones; the engine
//! decides how (serially, or split across emulated ranks) and keeps the
//! work ledger.

mod engine;
mod lts;
mod rk;

pub use engine::{Mask, SerialEngine, TendencyEngine, Zones};
pub(crate) use engine::{check_stage, ZonePlan};
pub use lts::{lts_interp_coeffs, lts_step, theta};
pub use rk::{rk4_step, ssprk_step, ssprk_weights};

use crate::error::{Error, Result};
use crate::mesh::VoronoiMesh;

/// Prognostic variables at one time level.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    /// Layer thickness per cell (m).
    pub h: Vec<f64>,
    /// Normal velocity per edge (m/s).
    pub u: Vec<f64>,
    /// Seconds.
    pub time: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scheme {
    Ssprk2,
    Ssprk3,
    Rk4,
    Lts2,
    Lts3,
}

impl Scheme {
    pub fn is_lts(self) -> bool {
        matches!(self, Scheme::Lts2 | Scheme::Lts3)
    }

    /// Tendency evaluations per step on each advanced element (LTS: per substep).
    pub fn stages(self) -> usize {
        match self {
            Scheme::Ssprk2 | Scheme::Lts2 => 2,
            Scheme::Ssprk3 | Scheme::Lts3 => 3,
            Scheme::Rk4 => 4,
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ssprk2" => Ok(Scheme::Ssprk2),
            "ssprk3" => Ok(Scheme::Ssprk3),
            "rk4" => Ok(Scheme::Rk4),
            "lts2" => Ok(Scheme::Lts2),
            "lts3" => Ok(Scheme::Lts3),
            _ => Err(Error::Usage(format!("unknown scheme `{s}` (expected ssprk2, ssprk3, rk4, lts2 or lts3)"))),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::Ssprk2 => "ssprk2",
            Scheme::Ssprk3 => "ssprk3",
            Scheme::Rk4 => "rk4",
            Scheme::Lts2 => "lts2",
            Scheme::Lts3 => "lts3",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    /// Coarse step (s).
    pub dt_coarse: f64,
    /// Fine substeps per coarse step; ignored by global schemes.
    pub m: usize,
}

impl SchemeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_coarse > 0.0 && self.dt_coarse.is_finite()) {
            return Err(Error::Config(format!("dt_coarse must be positive, got {}", self.dt_coarse)));
        }
        if self.m == 0 {
            return Err(Error::Config("M must be at least 1".into()));
        }
        Ok(())
    }
}

/// Advances one coarse step with the configured scheme.
pub fn step(cfg: &SchemeConfig, engine: &mut dyn TendencyEngine, state: &State) -> Result<State> {
    cfg.validate()?;
    match cfg.scheme {
        Scheme::Ssprk2 => ssprk_step(2, engine, state, cfg.dt_coarse),
        Scheme::Ssprk3 => ssprk_step(3, engine, state, cfg.dt_coarse),
        Scheme::Rk4 => rk4_step(engine, state, cfg.dt_coarse),
        Scheme::Lts2 => lts_step(2, engine, state, cfg.dt_coarse, cfg.m),
        Scheme::Lts3 => lts_step(3, engine, state, cfg.dt_coarse, cfg.m),
    }
}

/// Advisory Courant number `max|u_e| dt / min d_e` over `edges`.
pub fn courant_number(mesh: &VoronoiMesh, u: &[f64], dt: f64, edges: impl IntoIterator<Item = usize>) -> f64 {
    let (mut umax, mut dmin) = (0.0f64, f64::INFINITY);
    for e in edges {
        umax = umax.max(u[e].abs());
        dmin = dmin.min(mesh.dual_edge_length[e]);
    }
    if dmin.is_finite() {
        umax * dt / dmin
    } else {
        0.0
    }
}
