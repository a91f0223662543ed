mod common;

use std::f64::consts::PI;

use common::{lts_fixture, max_abs};
use trisk_lts::harness::*;
use trisk_lts::integrators::Scheme;
use trisk_lts::mesh::{generate_icosphere_mesh, write_mesh, DEFAULT_RADIUS};
use trisk_lts::operators::{gradient, tendencies};
use trisk_lts::partition::{make_block_plan, partition_multiconstraint, CellGraph};
use trisk_lts::{Error, SchemeConfig, State};

fn cfg(scheme: Scheme, dt: f64, m: usize) -> SchemeConfig {
    SchemeConfig { scheme, dt_coarse: dt, m }
}

#[test]
fn balanced_zonal_flow_is_nearly_steady() {
    // Without the mountain the initial state is in geostrophic balance; a
    // flipped Coriolis term would double the pressure gradient instead of
    // cancelling it.
    let m = generate_icosphere_mesh(3, 0, DEFAULT_RADIUS).unwrap();
    let tc = TestCaseConfig { mountain_height: 0.0, ..Default::default() };
    let (s, st) = init_tc5(&m, &tc).unwrap();
    let all_c: Vec<usize> = (0..m.n_cells()).collect();
    let all_e: Vec<usize> = (0..m.n_edges()).collect();
    let t = tendencies(&m, &s.h, &s.u, &st, &all_c, &all_e).unwrap();
    let pressure: Vec<f64> = gradient(&m, &s.h).iter().map(|g| st.g * g).collect();
    let ratio = max_abs(&t.du) / max_abs(&pressure);
    assert!(ratio < 0.5, "residual/pressure = {ratio}");
    assert!(max_abs(&t.dh) * 3600.0 < 1.0, "dh {}", max_abs(&t.dh));
}

#[test]
fn initial_state_matches_the_test_case() {
    let m = generate_icosphere_mesh(2, 0, DEFAULT_RADIUS).unwrap();
    let tc = TestCaseConfig::default();
    let (s, st) = init_tc5(&m, &tc).unwrap();
    assert_eq!(s.time, 0.0);
    for (i, p) in m.cell_center.iter().enumerate() {
        let (lon, lat) = p.lon_lat();
        let depth = tc.h0 - (DEFAULT_RADIUS * tc.omega * tc.u0 + tc.u0 * tc.u0 / 2.0) * lat.sin().powi(2) / tc.g;
        assert!((s.h[i] + st.b[i] - depth).abs() < 1e-9);
        assert!((st.b[i] - tc.mountain(lon, lat)).abs() < 1e-12);
    }
    assert!(max_abs(&s.u) <= tc.u0 + 1e-12);
    let tall = TestCaseConfig { mountain_height: 9000.0, ..tc };
    assert!(matches!(init_tc5(&m, &tall), Err(Error::Config(_))));
    let flat = TestCaseConfig { layers: 0, ..tc };
    assert!(matches!(init_tc5(&m, &flat), Err(Error::Config(_))));
}

#[test]
fn rk4_reference_converges_at_fourth_order() {
    let m = generate_icosphere_mesh(2, 0, DEFAULT_RADIUS).unwrap();
    let tc = TestCaseConfig::default();
    let r = convergence_study(&m, None, &tc, Scheme::Rk4, 1, &[900.0, 450.0, 225.0], 3600.0, None).unwrap();
    assert!(r.monotone);
    assert!((r.slope_h - 4.0).abs() < 0.5, "h slope {}", r.slope_h);
    assert!((r.slope_u - 4.0).abs() < 0.5, "u slope {}", r.slope_u);
    assert_eq!(r.dt_ref, 225.0 / 20.0);
    assert_eq!(r.to_csv().lines().count(), 4);
    assert!(convergence_study(&m, None, &tc, Scheme::Rk4, 1, &[900.0], 3600.0, None).is_err());
}

#[test]
fn slope_fit() {
    let x = [1.0, 2.0, 4.0, 8.0];
    let y: Vec<f64> = x.iter().map(|v| 3.0 * v * v).collect();
    assert!((fit_slope(&x, &y).unwrap() - 2.0).abs() < 1e-12);
    assert!(fit_slope(&[1.0], &[1.0]).is_err());
    assert!(fit_slope(&[1.0, 2.0], &[1.0, 0.0]).is_err());
    assert!(fit_slope(&[2.0, 2.0], &[1.0, 3.0]).is_err());
}

#[test]
fn unit_depth_holds_the_sphere_area() {
    let m = generate_icosphere_mesh(3, 0, DEFAULT_RADIUS).unwrap();
    let mass = total_mass(&m, &vec![1.0; m.n_cells()]);
    let area = 4.0 * PI * DEFAULT_RADIUS * DEFAULT_RADIUS;
    assert!((mass - area).abs() / area < 1e-12);
}

#[test]
fn error_norms() {
    let m = generate_icosphere_mesh(1, 0, DEFAULT_RADIUS).unwrap();
    let a = State { h: vec![1.0; m.n_cells()], u: vec![0.0; m.n_edges()], time: 0.0 };
    let b = State { h: vec![3.0; m.n_cells()], u: vec![-1.0; m.n_edges()], time: 0.0 };
    let plain = l2_error(&b, &a, None).unwrap();
    assert!((plain.l2_h - 2.0 * (m.n_cells() as f64).sqrt()).abs() < 1e-12);
    assert_eq!(plain.linf_u, 1.0);
    let w = l2_error(&b, &a, Some(&m)).unwrap();
    assert!((w.l2_h - 2.0).abs() < 1e-12 && (w.l2_u - 1.0).abs() < 1e-12);
    let short = State { h: vec![0.0; 3], u: vec![], time: 0.0 };
    assert!(l2_error(&short, &a, None).is_err());
}

#[test]
fn steps_must_divide_the_duration() {
    assert_eq!(steps_in(3600.0, 300.0).unwrap(), 12);
    assert!(steps_in(3600.0, 700.0).is_err());
    assert!(steps_in(0.0, 10.0).is_err());
    assert!(steps_in(10.0, -1.0).is_err());
}

#[test]
fn scheme_names() {
    assert_eq!(resolve_scheme("lts", Some(3)).unwrap(), Scheme::Lts3);
    assert_eq!(resolve_scheme("ssprk", Some(2)).unwrap(), Scheme::Ssprk2);
    assert_eq!(resolve_scheme("rk4", None).unwrap(), Scheme::Rk4);
    assert!(resolve_scheme("lts", None).is_err());
    assert!(resolve_scheme("lts2", Some(3)).is_err());
    assert!(resolve_scheme("euler", None).is_err());
}

#[test]
fn global_run_charges_every_cell_per_stage() {
    let m = generate_icosphere_mesh(2, 0, DEFAULT_RADIUS).unwrap();
    let tc = TestCaseConfig { layers: 2, ..Default::default() };
    let out = run_simulation(&m, None, None, &cfg(Scheme::Ssprk3, 600.0, 1), &tc, 3600.0).unwrap();
    assert_eq!(out.steps, 6);
    assert_eq!(out.ledger.total_cell_evals(), (3 * 6 * m.n_cells() * 2) as u64);
    assert_eq!(out.ledger.total_edge_evals(), (3 * 6 * m.n_edges() * 2) as u64);
    assert_eq!(out.diagnostics.len(), 7);
    assert_eq!(out.state.time, 3600.0);
    assert!(out.mass_drift() < 1e-13);
    assert!(run_simulation(&m, None, None, &cfg(Scheme::Lts3, 600.0, 2), &tc, 3600.0).is_err());
}

#[test]
fn partitioned_run_reproduces_the_serial_diagnostics() {
    let (m, map) = lts_fixture(3);
    let tc = TestCaseConfig::default();
    let scheme = cfg(Scheme::Lts3, 300.0, 4);
    let serial = run_simulation(&m, Some(&map), None, &scheme, &tc, 1800.0).unwrap();
    let labels = partition_multiconstraint(&CellGraph::from_mesh(&m, Some(&map)).unwrap(), 2, 1).unwrap();
    let plan = make_block_plan(&m, &map, &labels, 2).unwrap();
    let split = run_simulation(&m, Some(&map), Some(plan), &scheme, &tc, 1800.0).unwrap();
    assert_eq!(serial.diagnostics, split.diagnostics);
    assert_eq!(serial.state.h, split.state.h);
    assert_eq!(serial.ledger.cell_evals, split.ledger.cell_evals);
    assert!(serial.mass_drift() < 1e-13);
    assert!(serial.diagnostics.iter().all(|d| d.courant_fine > 0.0 && d.courant_coarse > 0.0));
}

#[test]
fn solver_failures_name_the_step() {
    let m = generate_icosphere_mesh(2, 0, DEFAULT_RADIUS).unwrap();
    let tc = TestCaseConfig::default();
    match run_simulation(&m, None, None, &cfg(Scheme::Ssprk3, 20000.0, 1), &tc, 400000.0) {
        Err(Error::Step { step, .. }) => assert!(step >= 1),
        other => panic!("expected a failed step, got {:?}", other.map(|o| o.steps)),
    }
}

const CONFIG: &str = r#"
mesh_path = "mesh.txt"
fine_size_ratio = 0.35
scheme = "lts"
order = 3
M = 4
dt_coarse = 300.0
duration = 1800.0
n_ranks = 2
case = "c"
output_dir = "out"
"#;

#[test]
fn run_config_parsing() {
    let c = RunConfig::from_toml(CONFIG).unwrap();
    assert_eq!(c.m, 4);
    assert_eq!(c.interface_width, 1);
    assert_eq!(c.layers_replication, 1);
    assert_eq!(c.scheme_config().unwrap(), cfg(Scheme::Lts3, 300.0, 4));
    assert_eq!(RunConfig::from_toml(&c.to_toml()).unwrap(), c);

    let unknown = format!("{CONFIG}\nsubsteps = 4\n");
    assert!(matches!(RunConfig::from_toml(&unknown), Err(Error::Config(_))));
    assert!(matches!(RunConfig::from_toml("scheme = \"rk4\""), Err(Error::Config(_))));
    let both = format!("{CONFIG}\ncap_center = [270.0, 30.0]\ncap_radius = 10.0\n");
    let m = generate_icosphere_mesh(1, 0, DEFAULT_RADIUS).unwrap();
    assert!(RunConfig::from_toml(&both).unwrap().region_map(&m).is_err());
    let bad_case = CONFIG.replace("\"c\"", "\"d\"");
    let (fm, fmap) = lts_fixture(3);
    assert!(RunConfig::from_toml(&bad_case).unwrap().partition_plan(&fm, Some(&fmap)).is_err());
}

#[test]
fn run_config_file_drives_a_run() {
    let dir = tempfile::tempdir().unwrap();
    let (m, _) = lts_fixture(3);
    write_mesh(&m, dir.path().join("mesh.txt")).unwrap();
    std::fs::write(dir.path().join("run.toml"), CONFIG).unwrap();
    let c = RunConfig::load(dir.path().join("run.toml")).unwrap();
    assert_eq!(c.mesh_path, dir.path().join("mesh.txt"));
    assert_eq!(c.output_dir, dir.path().join("out"));

    let mesh = c.mesh().unwrap();
    let map = c.region_map(&mesh).unwrap().unwrap();
    let plan = c.partition_plan(&mesh, Some(&map)).unwrap().unwrap();
    assert_eq!(plan.n_ranks, 2);
    let scheme = c.scheme_config().unwrap();
    let out = run_simulation(&mesh, Some(&map), Some(plan), &scheme, &c.test_case(), c.duration).unwrap();
    write_run_outputs(&out, &mesh, Some(&map), &scheme, &c.output_dir, &c.to_toml()).unwrap();

    let diag = std::fs::read_to_string(c.output_dir.join("diagnostics.csv")).unwrap();
    assert!(diag.starts_with("# "));
    assert!(diag.contains("step,time,total_mass,total_energy,courant_fine,courant_coarse"));
    assert_eq!(diag.lines().filter(|l| !l.starts_with('#')).count(), 1 + 7);
    let fields = std::fs::read_to_string(c.output_dir.join("fields_final.csv")).unwrap();
    assert_eq!(fields.lines().count(), 1 + mesh.n_cells() + mesh.n_edges() + mesh.n_vertices());
    assert!(c.output_dir.join("ledger.csv").exists());
    let report = std::fs::read_to_string(c.output_dir.join("report.txt")).unwrap();
    assert!(report.contains("optimal ratio"));
    assert!(report.contains("scheme             lts3"));
}

#[test]
fn speedup_arithmetic() {
    assert!((optimal_ratio(621007, 474467, 146540, 4).unwrap() - 2.342).abs() < 1e-3);
    assert!((gain_percent(2132.285, 650.889).unwrap() - 69.474).abs() < 1e-3);
    assert!(optimal_ratio(10, 3, 3, 2).is_err());
    assert!(gain_percent(0.0, 1.0).is_err());
    assert_eq!(coarse_fine_ratio(9, 2), 4.5);
}
