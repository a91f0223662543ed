//! Simulation driver, run configuration files and convergence studies.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{init_tc5, l2_error, mesh_metrics, optimal_ratio, total_energy, total_mass, ErrorReport, TestCaseConfig};
use crate::error::{Error, Result};
use crate::integrators::{courant_number, step, Scheme, SchemeConfig, SerialEngine, State, TendencyEngine, Zones};
use crate::ledger::{WorkLedger, Zone};
use crate::mesh::{read_mesh, VoronoiMesh};
use crate::operators::{vorticity_and_pv, write_field_dump, StaticFields};
use crate::partition::{
    concentrate_interface, make_block_plan, partition_multiconstraint, read_partition_file, CellGraph, PartitionPlan,
    PartitionedEngine,
};
use crate::regions::{build_region_map, fine_by_size, fine_in_cap, read_region_file, RegionMap};

fn one() -> usize {
    1
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// Run configuration, read from a `key = value` (TOML) file. Angles are in degrees.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mesh_path: PathBuf,
    /// Region file; takes precedence over the predicates below.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region_file: Option<PathBuf>,
    /// Fine cap center `[lon, lat]` and radius.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap_center: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap_radius: Option<f64>,
    /// Alternatively: fine where the cell diameter is below this fraction of the largest.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fine_size_ratio: Option<f64>,
    #[serde(default = "one")]
    pub interface_width: usize,
    /// `ssprk2`, `ssprk3`, `rk4`, `lts2`, `lts3`, or `ssprk`/`lts` together with `order`.
    pub scheme: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    #[serde(rename = "M", default = "one")]
    pub m: usize,
    pub dt_coarse: f64,
    pub duration: f64,
    /// Emulated ranks; serial evaluation when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_ranks: Option<usize>,
    /// Partition case; `C` concentrates all interface cells on rank 0.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub case: Option<String>,
    /// Imported per-cell rank labels instead of the built-in partitioner.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub part_file: Option<PathBuf>,
    #[serde(default = "one")]
    pub layers_replication: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mountain_height: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h0: Option<f64>,
}

/// Resolves `ssprk`/`lts` plus an order, or a full scheme name.
pub fn resolve_scheme(name: &str, order: Option<usize>) -> Result<Scheme> {
    let full = match (name.to_ascii_lowercase().as_str(), order) {
        ("ssprk", Some(o)) | ("lts", Some(o)) => format!("{name}{o}"),
        ("ssprk", None) | ("lts", None) => return Err(Error::Usage(format!("scheme `{name}` needs an order"))),
        _ => name.to_string(),
    };
    let scheme: Scheme = full.parse()?;
    if let Some(o) = order {
        let expected = match scheme {
            Scheme::Ssprk2 | Scheme::Lts2 => 2,
            Scheme::Ssprk3 | Scheme::Lts3 => 3,
            Scheme::Rk4 => 4,
        };
        if o != expected {
            return Err(Error::Config(format!("order {o} does not match scheme {scheme}")));
        }
    }
    Ok(scheme)
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("run config: {e}")))
    }

    /// Loads a config file; relative paths inside it are taken relative to the file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut cfg.mesh_path);
        fix(&mut cfg.output_dir);
        cfg.region_file.as_mut().map(fix);
        cfg.part_file.as_mut().map(fix);
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).unwrap_or_default()
    }

    pub fn mesh(&self) -> Result<VoronoiMesh> {
        read_mesh(&self.mesh_path)
    }

    pub fn scheme_config(&self) -> Result<SchemeConfig> {
        let cfg = SchemeConfig {
            scheme: resolve_scheme(&self.scheme, self.order)?,
            dt_coarse: self.dt_coarse,
            m: self.m,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn test_case(&self) -> TestCaseConfig {
        let mut tc = TestCaseConfig {
            layers: self.layers_replication,
            ..Default::default()
        };
        if let Some(x) = self.mountain_height {
            tc.mountain_height = x;
        }
        if let Some(x) = self.u0 {
            tc.u0 = x;
        }
        if let Some(x) = self.h0 {
            tc.h0 = x;
        }
        tc
    }

    /// Region map from the region file or the fine-cell predicate, if any.
    pub fn region_map(&self, mesh: &VoronoiMesh) -> Result<Option<RegionMap>> {
        if let Some(path) = &self.region_file {
            return read_region_file(mesh, path).map(Some);
        }
        let fine = match (self.cap_center, self.cap_radius, self.fine_size_ratio) {
            (Some([lon, lat]), Some(r), None) => fine_in_cap(mesh, (lon.to_radians(), lat.to_radians()), r.to_radians()),
            (None, None, Some(ratio)) => fine_by_size(mesh, ratio),
            (None, None, None) => return Ok(None),
            _ => {
                return Err(Error::Config(
                    "give either cap_center with cap_radius, or fine_size_ratio".into(),
                ))
            }
        };
        build_region_map(mesh, |i| fine[i], self.interface_width).map(Some)
    }

    /// Partition plan when `n_ranks` is set.
    pub fn partition_plan(&self, mesh: &VoronoiMesh, map: Option<&RegionMap>) -> Result<Option<PartitionPlan>> {
        let Some(n) = self.n_ranks else { return Ok(None) };
        let map = map.ok_or_else(|| Error::Config("partitioned runs need a region map".into()))?;
        let labels = match &self.part_file {
            Some(p) => read_partition_file(p, n, mesh.n_cells())?,
            None => partition_multiconstraint(&CellGraph::from_mesh(mesh, Some(map))?, n, self.seed)?,
        };
        let plan = make_block_plan(mesh, map, &labels, n)?;
        Ok(Some(match self.case.as_deref().map(str::to_ascii_uppercase).as_deref() {
            None | Some("A") | Some("B") => plan,
            Some("C") => concentrate_interface(mesh, map, &plan),
            Some(other) => return Err(Error::Config(format!("unknown partition case `{other}` (A, B or C)"))),
        }))
    }
}

/// Number of whole steps of `dt` in `duration`.
pub fn steps_in(duration: f64, dt: f64) -> Result<usize> {
    if !(duration > 0.0 && dt > 0.0) {
        return Err(Error::Config(format!("duration {duration} and dt {dt} must be positive")));
    }
    let n = (duration / dt).round();
    if (n * dt - duration).abs() > 1e-9 * duration || n < 1.0 {
        return Err(Error::Config(format!("duration {duration} is not a multiple of dt {dt}")));
    }
    Ok(n as usize)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Diagnostics {
    pub step: usize,
    pub time: f64,
    pub total_mass: f64,
    pub total_energy: f64,
    /// Courant numbers over fine edges (at the fine step) and the remaining edges.
    pub courant_fine: f64,
    pub courant_coarse: f64,
}

pub struct RunOutput {
    pub state: State,
    pub statics: StaticFields,
    pub diagnostics: Vec<Diagnostics>,
    pub ledger: WorkLedger,
    pub steps: usize,
}

impl RunOutput {
    pub fn diagnostics_csv(&self) -> String {
        let mut s = String::from("step,time,total_mass,total_energy,courant_fine,courant_coarse\n");
        for d in &self.diagnostics {
            let _ = writeln!(
                s,
                "{},{:.6},{:.16e},{:.16e},{:.6e},{:.6e}",
                d.step, d.time, d.total_mass, d.total_energy, d.courant_fine, d.courant_coarse
            );
        }
        s
    }

    /// Relative change of total mass between the first and last diagnostics.
    pub fn mass_drift(&self) -> f64 {
        match (self.diagnostics.first(), self.diagnostics.last()) {
            (Some(a), Some(b)) => (b.total_mass - a.total_mass).abs() / a.total_mass.abs(),
            _ => 0.0,
        }
    }
}

fn diagnose(mesh: &VoronoiMesh, zones: &Zones, cfg: &SchemeConfig, statics: &StaticFields, state: &State, step: usize) -> Diagnostics {
    let fine_bits = Zone::FineInner.bit() | Zone::UnderlineFine.bit();
    let dt_fine = if cfg.scheme.is_lts() { cfg.dt_coarse / cfg.m as f64 } else { cfg.dt_coarse };
    Diagnostics {
        step,
        time: state.time,
        total_mass: total_mass(mesh, &state.h),
        total_energy: total_energy(mesh, state, statics),
        courant_fine: courant_number(mesh, &state.u, dt_fine, zones.edges(fine_bits)),
        courant_coarse: courant_number(mesh, &state.u, cfg.dt_coarse, zones.edges(!fine_bits & 0x1f)),
    }
}

/// Advances `state` by `n_steps` coarse steps, recording diagnostics when asked.
pub fn integrate(
    mesh: &VoronoiMesh,
    cfg: &SchemeConfig,
    engine: &mut dyn TendencyEngine,
    statics: &StaticFields,
    mut state: State,
    n_steps: usize,
    mut diagnostics: Option<&mut Vec<Diagnostics>>,
) -> Result<State> {
    if let Some(d) = diagnostics.as_deref_mut() {
        d.push(diagnose(mesh, engine.zones(), cfg, statics, &state, 0));
    }
    for k in 1..=n_steps {
        state = step(cfg, engine, &state).map_err(|e| Error::Step { step: k, source: Box::new(e) })?;
        if let Some(d) = diagnostics.as_deref_mut() {
            d.push(diagnose(mesh, engine.zones(), cfg, statics, &state, k));
        }
    }
    Ok(state)
}

/// Test case 5 for `duration` seconds. With a plan, tendencies are computed
/// by emulated ranks; otherwise serially.
pub fn run_simulation(
    mesh: &VoronoiMesh,
    map: Option<&RegionMap>,
    plan: Option<PartitionPlan>,
    scheme: &SchemeConfig,
    tc: &TestCaseConfig,
    duration: f64,
) -> Result<RunOutput> {
    scheme.validate()?;
    let n_steps = steps_in(duration, scheme.dt_coarse)?;
    let (s0, statics) = init_tc5(mesh, tc)?;
    let zones = match map {
        Some(m) => Zones::from_map(mesh, m)?,
        None if scheme.scheme.is_lts() => {
            return Err(Error::Config(format!("{} needs a region map", scheme.scheme)));
        }
        None => Zones::uniform(mesh),
    };
    let mut diagnostics = Vec::with_capacity(n_steps + 1);
    let (state, ledger) = match plan {
        Some(p) => {
            let mut eng = PartitionedEngine::new(mesh, &statics, zones, p, tc.layers)?;
            let s = integrate(mesh, scheme, &mut eng, &statics, s0, n_steps, Some(&mut diagnostics))?;
            (s, eng.ledger().clone())
        }
        None => {
            let mut eng = SerialEngine::new(mesh, &statics, zones, tc.layers);
            let s = integrate(mesh, scheme, &mut eng, &statics, s0, n_steps, Some(&mut diagnostics))?;
            (s, eng.ledger().clone())
        }
    };
    Ok(RunOutput {
        state,
        statics,
        diagnostics,
        ledger,
        steps: n_steps,
    })
}

/// Writes `diagnostics.csv`, `fields_final.csv`, `ledger.csv` and
/// `report.txt` into `dir`. `header` (the effective config) opens the report
/// and is repeated as `#` comments at the top of the diagnostics.
pub fn write_run_outputs(
    out: &RunOutput,
    mesh: &VoronoiMesh,
    map: Option<&RegionMap>,
    scheme: &SchemeConfig,
    dir: impl AsRef<Path>,
    header: &str,
) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let comment: String = header.lines().map(|l| format!("# {l}\n")).collect();
    std::fs::write(dir.join("diagnostics.csv"), comment + &out.diagnostics_csv())?;
    let pv = vorticity_and_pv(mesh, &out.state.h, &out.state.u, &out.statics.f).unwrap_or_default();
    write_field_dump(dir.join("fields_final.csv"), &out.state.h, &out.state.u, &pv)?;
    out.ledger.write_csv(dir.join("ledger.csv"))?;
    std::fs::write(dir.join("report.txt"), run_report(out, mesh, map, scheme, header))?;
    Ok(())
}

pub fn run_report(out: &RunOutput, mesh: &VoronoiMesh, map: Option<&RegionMap>, scheme: &SchemeConfig, header: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{}", header.trim_end());
    let _ = writeln!(s, "---");
    let _ = writeln!(s, "scheme             {}", scheme.scheme);
    let _ = writeln!(s, "steps              {}", out.steps);
    let _ = writeln!(s, "final time (s)     {}", out.state.time);
    let _ = writeln!(s, "cells/edges        {} / {}", mesh.n_cells(), mesh.n_edges());
    let _ = writeln!(s, "mass drift (rel)   {:.3e}", out.mass_drift());
    let _ = writeln!(s, "cell evaluations   {}", out.ledger.total_cell_evals());
    let _ = writeln!(s, "edge evaluations   {}", out.ledger.total_edge_evals());
    let _ = writeln!(s, "rhs wall time (s)  {:.3}", out.ledger.wall_time.iter().sum::<f64>());
    if let Some(map) = map {
        let (f, i1, i2, c) = map.counts();
        let (a_ls, c_cf) = mesh_metrics(mesh, map);
        let _ = writeln!(s, "regions F/I1/I2/C  {f} / {i1} / {i2} / {c}");
        let _ = writeln!(s, "A_ls               {a_ls:.3}");
        let _ = writeln!(s, "C_cf               {c_cf:.3}");
        if scheme.scheme.is_lts() {
            if let Ok(r) = optimal_ratio(mesh.n_cells() as u64, (i1 + i2 + c) as u64, f as u64, scheme.m as u64) {
                let _ = writeln!(s, "optimal ratio      {r:.3}");
            }
        }
    }
    s
}

/// RK4 solution at `duration` with step `dt_ref`, used as the error reference.
pub fn reference_solution(mesh: &VoronoiMesh, tc: &TestCaseConfig, dt_ref: f64, duration: f64) -> Result<State> {
    let n = steps_in(duration, dt_ref)?;
    let (s0, statics) = init_tc5(mesh, tc)?;
    let cfg = SchemeConfig {
        scheme: Scheme::Rk4,
        dt_coarse: dt_ref,
        m: 1,
    };
    let mut eng = SerialEngine::new(mesh, &statics, Zones::uniform(mesh), 1);
    integrate(mesh, &cfg, &mut eng, &statics, s0, n, None)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Usage("slope fit needs at least two (x, y) pairs".into()));
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return Err(Error::Usage("slope fit needs positive values".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Usage("slope fit needs distinct x values".into()));
    }
    Ok(sxy / sxx)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceResult {
    pub scheme: Scheme,
    pub m: usize,
    pub dts: Vec<f64>,
    pub dt_ref: f64,
    pub errors: Vec<ErrorReport>,
    pub slope_h: f64,
    pub slope_u: f64,
    /// Errors decrease strictly with dt for both fields.
    pub monotone: bool,
}

impl ConvergenceResult {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("dt,l2_h,l2_u,linf_h,linf_u\n");
        for (dt, e) in self.dts.iter().zip(&self.errors) {
            let _ = writeln!(s, "{dt},{:.6e},{:.6e},{:.6e},{:.6e}", e.l2_h, e.l2_u, e.linf_h, e.linf_u);
        }
        s
    }
}

/// Errors of `scheme` against an RK4 reference over a ladder of coarse
/// steps. Without `reference`, one is computed at `min(dts)/20`.
#[allow(clippy::too_many_arguments)]
pub fn convergence_study(
    mesh: &VoronoiMesh,
    map: Option<&RegionMap>,
    tc: &TestCaseConfig,
    scheme: Scheme,
    m: usize,
    dts: &[f64],
    duration: f64,
    reference: Option<(&State, f64)>,
) -> Result<ConvergenceResult> {
    if dts.len() < 2 {
        return Err(Error::Usage("a convergence study needs at least two time steps".into()));
    }
    let dt_min = dts.iter().cloned().fold(f64::INFINITY, f64::min);
    let owned;
    let (reference, dt_ref) = match reference {
        Some(r) => r,
        None => {
            owned = reference_solution(mesh, tc, dt_min / 20.0, duration)?;
            (&owned, dt_min / 20.0)
        }
    };
    let (s0, statics) = init_tc5(mesh, tc)?;
    let zones = match map {
        Some(mp) => Zones::from_map(mesh, mp)?,
        None => Zones::uniform(mesh),
    };
    let mut errors = Vec::with_capacity(dts.len());
    for &dt in dts {
        let cfg = SchemeConfig { scheme, dt_coarse: dt, m };
        cfg.validate()?;
        let mut eng = SerialEngine::new(mesh, &statics, zones.clone(), 1);
        let end = integrate(mesh, &cfg, &mut eng, &statics, s0.clone(), steps_in(duration, dt)?, None)?;
        errors.push(l2_error(&end, reference, None)?);
    }
    let eh: Vec<f64> = errors.iter().map(|e| e.l2_h).collect();
    let eu: Vec<f64> = errors.iter().map(|e| e.l2_u).collect();
    let mut order: Vec<usize> = (0..dts.len()).collect();
    order.sort_by(|&a, &b| dts[a].total_cmp(&dts[b]));
    let monotone = order.windows(2).all(|w| eh[w[0]] < eh[w[1]] && eu[w[0]] < eu[w[1]]);
    if !monotone {
        log::warn!("{scheme} M={m}: errors do not decrease monotonically with dt");
    }
    Ok(ConvergenceResult {
        scheme,
        m,
        dts: dts.to_vec(),
        dt_ref,
        slope_h: fit_slope(dts, &eh)?,
        slope_u: fit_slope(dts, &eu)?,
        errors,
        monotone,
    })
}
