//! Test case 5 (zonal flow over an isolated mountain), error norms, the
//! simulation driver, convergence studies and the derived speedup metrics.

mod run;

pub use run::{
    convergence_study, fit_slope, integrate, reference_solution, resolve_scheme, run_report, run_simulation, steps_in,
    write_run_outputs, ConvergenceResult, Diagnostics, RunConfig, RunOutput,
};

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::integrators::State;
use crate::mesh::{Vec3, VoronoiMesh, DEFAULT_RADIUS};
use crate::operators::{kinetic_energy, StaticFields};
use crate::regions::RegionMap;

pub use crate::ledger::WorkLedger;

/// Mountain and background-flow parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TestCaseConfig {
    /// Mountain center longitude and latitude (rad).
    pub center_lon: f64,
    pub center_lat: f64,
    /// Mountain radius (rad).
    pub mountain_radius: f64,
    /// Peak height (m).
    pub mountain_height: f64,
    /// Zonal wind speed at the equator (m/s).
    pub u0: f64,
    /// Mean fluid depth (m).
    pub h0: f64,
    pub g: f64,
    pub omega: f64,
    pub radius: f64,
    /// Each tendency kernel runs this many times (cost replication only).
    pub layers: usize,
}

impl Default for TestCaseConfig {
    fn default() -> Self {
        Self {
            center_lon: 1.5 * PI,
            center_lat: PI / 6.0,
            mountain_radius: PI / 9.0,
            mountain_height: 2000.0,
            u0: 20.0,
            h0: 5960.0,
            g: 9.80616,
            omega: 7.292e-5,
            radius: DEFAULT_RADIUS,
            layers: 1,
        }
    }
}

impl TestCaseConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.mountain_radius > 0.0 && self.mountain_radius < PI) {
            return Err(Error::Config(format!("mountain radius {} must lie in (0, π)", self.mountain_radius)));
        }
        if self.layers == 0 {
            return Err(Error::Config("layers replication must be at least 1".into()));
        }
        Ok(())
    }

    /// Mountain height at `(lon, lat)`: `h_s0 (1 - r/R)` with
    /// `r² = min(R², Δλ² + Δθ²)`.
    pub fn mountain(&self, lon: f64, lat: f64) -> f64 {
        let r_big = self.mountain_radius;
        let d2 = (lon - self.center_lon).powi(2) + (lat - self.center_lat).powi(2);
        let r = d2.min(r_big * r_big).sqrt();
        self.mountain_height * (1.0 - r / r_big)
    }
}

/// Balanced zonal flow over the mountain. Returns the initial state and
/// the static fields (topography, `f = 2Ω sin θ`, gravity).
pub fn init_tc5(mesh: &VoronoiMesh, cfg: &TestCaseConfig) -> Result<(State, StaticFields)> {
    cfg.validate()?;
    let a = mesh.radius;
    let b: Vec<f64> = mesh
        .cell_center
        .iter()
        .map(|p| {
            let (lon, lat) = p.lon_lat();
            cfg.mountain(lon, lat)
        })
        .collect();
    let coef = a * cfg.omega * cfg.u0 + 0.5 * cfg.u0 * cfg.u0;
    let mut h = Vec::with_capacity(mesh.n_cells());
    for (i, p) in mesh.cell_center.iter().enumerate() {
        let sin_lat = p.z;
        let hi = cfg.h0 - coef * sin_lat * sin_lat / cfg.g - b[i];
        if hi <= 0.0 {
            return Err(Error::Config(format!("cell {i}: mountain reaches above the fluid (h = {hi})")));
        }
        h.push(hi);
    }
    let k = Vec3::new(0.0, 0.0, 1.0);
    let u = (0..mesh.n_edges())
        .map(|e| {
            let xe = mesh.edge_pos[e];
            let [c0, c1] = mesh.cells_on_edge[e];
            let (lo, hi) = (c0.min(c1), c0.max(c1));
            let d = mesh.cell_center[lo] - mesh.cell_center[hi];
            let normal = (d - xe * xe.dot(d)).normalized();
            // u0 cos θ times the eastward unit vector is u0 (k × x).
            k.cross(xe).dot(normal) * cfg.u0
        })
        .collect();
    let f = mesh.vertex_pos.iter().map(|p| 2.0 * cfg.omega * p.z).collect();
    Ok((State { h, u, time: 0.0 }, StaticFields { b, f, g: cfg.g }))
}

/// Error norms of one state against another.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ErrorReport {
    pub l2_h: f64,
    pub l2_u: f64,
    pub linf_h: f64,
    pub linf_u: f64,
}

/// Plain vector l2 over cells and edges, or area-weighted
/// (`A_i` on cells, `l_e d_e` on edges, normalized by total weight) when
/// `weighted` and a mesh is given.
pub fn l2_error(a: &State, reference: &State, weighted: Option<&VoronoiMesh>) -> Result<ErrorReport> {
    if a.h.len() != reference.h.len() || a.u.len() != reference.u.len() {
        return Err(Error::Usage("states live on different meshes".into()));
    }
    if let Some(m) = weighted {
        if m.n_cells() != a.h.len() || m.n_edges() != a.u.len() {
            return Err(Error::Usage("weighting mesh does not match the states".into()));
        }
    }
    let norm = |x: &[f64], y: &[f64], w: &dyn Fn(usize) -> f64| {
        let (mut s, mut ws, mut inf) = (0.0, 0.0, 0.0f64);
        for k in 0..x.len() {
            let d = x[k] - y[k];
            s += w(k) * d * d;
            ws += w(k);
            inf = inf.max(d.abs());
        }
        (s, ws, inf)
    };
    let (sh, wh, ih, su, wu, iu);
    match weighted {
        Some(m) => {
            (sh, wh, ih) = norm(&a.h, &reference.h, &|i| m.area_cell[i]);
            (su, wu, iu) = norm(&a.u, &reference.u, &|e| m.edge_length[e] * m.dual_edge_length[e]);
            Ok(ErrorReport {
                l2_h: (sh / wh).sqrt(),
                l2_u: (su / wu).sqrt(),
                linf_h: ih,
                linf_u: iu,
            })
        }
        None => {
            (sh, _, ih) = norm(&a.h, &reference.h, &|_| 1.0);
            (su, _, iu) = norm(&a.u, &reference.u, &|_| 1.0);
            Ok(ErrorReport {
                l2_h: sh.sqrt(),
                l2_u: su.sqrt(),
                linf_h: ih,
                linf_u: iu,
            })
        }
    }
}

/// `Σ A_i h_i` (m³), summed in cell order.
pub fn total_mass(mesh: &VoronoiMesh, h: &[f64]) -> f64 {
    mesh.area_cell.iter().zip(h).map(|(a, x)| a * x).sum()
}

/// `Σ A_i (h_i K_i + g h_i (h_i/2 + b_i))`.
pub fn total_energy(mesh: &VoronoiMesh, state: &State, statics: &StaticFields) -> f64 {
    let k = kinetic_energy(mesh, &state.u);
    (0..mesh.n_cells())
        .map(|i| {
            let h = state.h[i];
            mesh.area_cell[i] * (h * k[i] + statics.g * h * (0.5 * h + statics.b[i]))
        })
        .sum()
}

/// Ideal LTS speedup over global stepping at the fine step:
/// `M n / (n_coarse_dt + M n_fine_dt)`.
pub fn optimal_ratio(n_total: u64, n_coarse_dt_cells: u64, n_fine_dt_cells: u64, m: u64) -> Result<f64> {
    if n_coarse_dt_cells + n_fine_dt_cells != n_total {
        return Err(Error::Usage(format!(
            "cell counts {n_coarse_dt_cells} + {n_fine_dt_cells} do not add up to {n_total}"
        )));
    }
    if m == 0 || n_total == 0 {
        return Err(Error::Usage("M and the cell count must be positive".into()));
    }
    Ok((m * n_total) as f64 / (n_coarse_dt_cells + m * n_fine_dt_cells) as f64)
}

/// Time saved relative to the reference, in percent.
pub fn gain_percent(t_reference: f64, t_lts: f64) -> Result<f64> {
    if !(t_reference > 0.0) {
        return Err(Error::Usage(format!("reference time must be positive, got {t_reference}")));
    }
    Ok((t_reference - t_lts) * 100.0 / t_reference)
}

/// Coarse-step cells per fine-step cell.
pub fn coarse_fine_ratio(n_coarse_dt_cells: usize, n_fine_dt_cells: usize) -> f64 {
    n_coarse_dt_cells as f64 / n_fine_dt_cells as f64
}

/// `(A_ls, C_cf)`: largest over smallest cell area, and
/// `(coarse + interface cells) / fine cells`.
pub fn mesh_metrics(mesh: &VoronoiMesh, map: &RegionMap) -> (f64, f64) {
    let (f, i1, i2, c) = map.counts();
    (mesh.area_ratio(), coarse_fine_ratio(c + i1 + i2, f))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mountain_profile() {
        let cfg = TestCaseConfig::default();
        assert_eq!(cfg.mountain(cfg.center_lon, cfg.center_lat), 2000.0);
        assert_eq!(cfg.mountain(0.0, -1.0), 0.0);
        let r = cfg.mountain_radius / 2.0;
        assert!((cfg.mountain(cfg.center_lon + r, cfg.center_lat) - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn derived_metrics() {
        assert_eq!(optimal_ratio(10, 4, 6, 1).unwrap(), 1.0);
        assert_eq!(optimal_ratio(10, 0, 10, 4).unwrap(), 1.0);
        assert!(optimal_ratio(10, 4, 5, 4).is_err());
        assert_eq!(gain_percent(100.0, 50.0).unwrap(), 50.0);
        assert_eq!(gain_percent(3.0, 3.0).unwrap(), 0.0);
        assert!(gain_percent(0.0, 1.0).is_err());
    }

    #[test]
    fn l2_of_a_known_difference() {
        let a = State { h: vec![3.0, 4.0, 0.0], u: vec![0.0], time: 0.0 };
        let b = State { h: vec![0.0; 3], u: vec![0.0], time: 0.0 };
        let r = l2_error(&a, &b, None).unwrap();
        assert_eq!(r.l2_h, 5.0);
        assert_eq!(l2_error(&a, &a, None).unwrap(), ErrorReport::default());
        let c = State { h: vec![0.0; 2], u: vec![0.0], time: 0.0 };
        assert!(matches!(l2_error(&a, &c, None), Err(Error::Usage(_))));
    }
}
