mod common;

use proptest::prelude::*;
use trisk_lts::mesh::{generate_icosphere_mesh, generate_refined_mesh, RefineSpec, DEFAULT_RADIUS};
use trisk_lts::operators::*;
use trisk_lts::{Error, VoronoiMesh};

use common::{random_field, rel_diff};

fn level0() -> VoronoiMesh {
    generate_icosphere_mesh(0, 0, DEFAULT_RADIUS).unwrap()
}

fn statics(m: &VoronoiMesh, seed: u64) -> StaticFields {
    StaticFields {
        b: random_field(m.n_cells(), 0.0, 500.0, seed),
        f: random_field(m.n_vertices(), -1.4e-4, 1.4e-4, seed + 1),
        g: 9.80616,
    }
}

#[test]
fn thickness_to_edge_is_the_mean() {
    let m = level0();
    let h = random_field(12, 1.0, 5.0, 1);
    let he = thickness_to_edge(&m, &h);
    for e in 0..m.n_edges() {
        let [a, b] = m.cells_on_edge[e];
        assert_eq!(he[e], 0.5 * (h[a] + h[b]));
    }
    assert!(thickness_to_edge(&m, &[7.5; 12]).iter().all(|&x| x == 7.5));
}

#[test]
fn level_zero_operators_match_oracles() {
    let m = level0();
    for seed in 0..5 {
        let h = random_field(m.n_cells(), 1000.0, 2000.0, 10 + seed);
        let u = random_field(m.n_edges(), -30.0, 30.0, 20 + seed);
        let flux = random_field(m.n_edges(), -1e4, 1e4, 30 + seed);
        let f = random_field(m.n_vertices(), -1e-4, 1e-4, 40 + seed);
        let tol = 1e-13;
        assert!(rel_diff(&divergence(&m, &flux), &common::divergence(&m, &flux), 0.0) < tol);
        assert!(rel_diff(&gradient(&m, &h), &common::gradient(&m, &h), 0.0) < tol);
        assert!(rel_diff(&kinetic_energy(&m, &u), &common::kinetic_energy(&m, &u), 0.0) < tol);
        assert!(rel_diff(&perp_flux(&m, &flux), &common::perp_flux(&m, &flux), 0.0) < tol);
        let q = vorticity_and_pv(&m, &h, &u, &f).unwrap();
        assert!(rel_diff(&q, &common::potential_vorticity(&m, &h, &u, &f), 0.0) < tol);
        assert!(rel_diff(&pv_flux_term(&m, &q, &flux), &common::pv_flux(&m, &q, &flux), 0.0) < tol);
        assert!(rel_diff(&thickness_flux(&m, &h, &u), &common::flux(&m, &h, &u), 0.0) < tol);
    }
}

#[test]
fn level_zero_tendencies_match_monolithic_oracle() {
    let m = level0();
    let s = statics(&m, 3);
    let h = random_field(m.n_cells(), 3000.0, 6000.0, 5);
    let u = random_field(m.n_edges(), -40.0, 40.0, 6);
    let all_c: Vec<usize> = (0..m.n_cells()).collect();
    let all_e: Vec<usize> = (0..m.n_edges()).collect();
    let t = tendencies(&m, &h, &u, &s, &all_c, &all_e).unwrap();
    let (dh, du) = common::rhs(&m, &h, &u, &s.b, &s.f, s.g);
    assert!(rel_diff(&t.dh, &dh, 0.0) < 1e-13);
    assert!(rel_diff(&t.du, &du, 0.0) < 1e-13);
}

#[test]
fn gradient_sign_convention() {
    let m = level0();
    let e = 0;
    let [a, b] = m.cells_on_edge[e];
    let (lo, hi) = (a.min(b), a.max(b));
    let mut phi = vec![0.0; 12];
    phi[hi] = 3.0;
    phi[lo] = 1.0;
    let g = gradient(&m, &phi)[e];
    assert!((g - (1.0 - 3.0) / m.dual_edge_length[e]).abs() < 1e-18);
}

#[test]
fn zero_and_constant_inputs() {
    let m = level0();
    let zero_e = vec![0.0; m.n_edges()];
    assert!(divergence(&m, &zero_e).iter().all(|&x| x == 0.0));
    assert!(gradient(&m, &[4.0; 12]).iter().all(|&x| x == 0.0));
    assert!(kinetic_energy(&m, &zero_e).iter().all(|&x| x == 0.0));
    assert!(perp_flux(&m, &zero_e).iter().all(|&x| x == 0.0));
    let f = vec![1e-4; m.n_vertices()];
    let q = vorticity_and_pv(&m, &[1000.0; 12], &zero_e, &f).unwrap();
    assert!(q.iter().all(|&x| (x - 1e-7).abs() < 1e-22));
    let flux = random_field(m.n_edges(), -1.0, 1.0, 9);
    assert!(pv_flux_term(&m, &q, &zero_e).iter().all(|&x| x == 0.0));
    let q0 = vec![2.5; m.n_vertices()];
    let lhs = pv_flux_term(&m, &q0, &flux);
    let rhs: Vec<f64> = perp_flux(&m, &flux).iter().map(|x| 2.5 * x).collect();
    assert!(rel_diff(&lhs, &rhs, 0.0) < 1e-14);
}

#[test]
fn rest_state_has_zero_tendency() {
    let m = generate_icosphere_mesh(2, 0, DEFAULT_RADIUS).unwrap();
    let s = StaticFields {
        b: vec![100.0; m.n_cells()],
        f: vec![1e-4; m.n_vertices()],
        g: 9.81,
    };
    let all_c: Vec<usize> = (0..m.n_cells()).collect();
    let all_e: Vec<usize> = (0..m.n_edges()).collect();
    let t = tendencies(&m, &vec![5000.0; m.n_cells()], &vec![0.0; m.n_edges()], &s, &all_c, &all_e).unwrap();
    assert!(t.dh.iter().all(|&x| x == 0.0));
    assert!(t.du.iter().all(|&x| x == 0.0));
}

#[test]
fn dry_vertex_is_reported() {
    let m = level0();
    let mut h = vec![10.0; 12];
    h[m.cells_on_vertex[3][0]] = -100.0;
    match vorticity_and_pv(&m, &h, &vec![0.0; 30], &[0.0; 20]) {
        Err(Error::DryVertex { thickness, .. }) => assert!(thickness <= 0.0),
        other => panic!("expected dry vertex, got {other:?}"),
    }
}

fn refined_fixture() -> VoronoiMesh {
    let spec = RefineSpec {
        center: (1.0, 0.3),
        radius: 0.5,
        factor: 3,
    };
    generate_refined_mesh(2, spec, 2, DEFAULT_RADIUS).unwrap()
}

#[test]
fn restricted_evaluation_is_bitwise_equal_to_full() {
    let m = refined_fixture();
    let s = statics(&m, 7);
    let h = random_field(m.n_cells(), 4000.0, 6000.0, 8);
    let u = random_field(m.n_edges(), -20.0, 20.0, 9);
    let all_c: Vec<usize> = (0..m.n_cells()).collect();
    let all_e: Vec<usize> = (0..m.n_edges()).collect();
    let full = tendencies(&m, &h, &u, &s, &all_c, &all_e).unwrap();
    let cells: Vec<usize> = (0..m.n_cells()).filter(|i| i % 7 == 3).collect();
    let edges: Vec<usize> = (0..m.n_edges()).filter(|e| e % 5 == 1).collect();
    // Poison everything the plan does not read.
    let plan = EvalPlan::new(&m, cells.clone(), edges.clone());
    let mut hp = vec![f64::NAN; m.n_cells()];
    let mut up = vec![f64::NAN; m.n_edges()];
    for i in plan.input_cells(&m) {
        hp[i] = h[i];
    }
    for e in plan.input_edges(&m) {
        up[e] = u[e];
    }
    let part = tendencies(&m, &hp, &up, &s, &cells, &edges).unwrap();
    for &i in &cells {
        assert_eq!(part.dh[i].to_bits(), full.dh[i].to_bits());
    }
    for &e in &edges {
        assert_eq!(part.du[e].to_bits(), full.du[e].to_bits());
    }
    assert!(part.dh.iter().enumerate().all(|(i, x)| cells.contains(&i) || x.is_nan()));
}

#[test]
fn stencil_fits_in_two_rings() {
    let m = refined_fixture();
    for e in [0, 17, 301] {
        let plan = EvalPlan::new(&m, vec![], vec![e]);
        let mut ring: Vec<usize> = m.cells_on_edge[e].to_vec();
        for _ in 0..1 {
            let next: Vec<usize> = ring.iter().flat_map(|&c| m.neighbors_of_cell(c).to_vec()).collect();
            ring.extend(next);
        }
        for c in plan.input_cells(&m) {
            assert!(ring.contains(&c), "edge {e} reads cell {c} outside one ring of its cells");
        }
    }
    for i in [0, 40, 90] {
        let plan = EvalPlan::new(&m, vec![i], vec![]);
        for c in plan.input_cells(&m) {
            assert!(c == i || m.neighbors_of_cell(i).contains(&c));
        }
    }
}

#[test]
fn global_conservation_identities() {
    let m = refined_fixture();
    let flux = random_field(m.n_edges(), -1e5, 1e5, 11);
    let div = divergence(&m, &flux);
    let total: f64 = div.iter().zip(&m.area_cell).map(|(d, a)| d * a).sum();
    let scale: f64 = flux.iter().zip(&m.edge_length).map(|(f, l)| (f * l).abs()).sum();
    assert!(total.abs() <= 1e-12 * scale, "Σ A div = {total}");

    let perp = perp_flux(&m, &flux);
    let energy: f64 = (0..m.n_edges()).map(|e| m.edge_length[e] * m.dual_edge_length[e] * flux[e] * perp[e]).sum();
    let escale: f64 = (0..m.n_edges()).map(|e| (m.edge_length[e] * m.dual_edge_length[e] * flux[e] * flux[e]).abs()).sum();
    assert!(energy.abs() <= 1e-11 * escale, "Σ l d F F⊥ = {energy}");

    let u = random_field(m.n_edges(), -30.0, 30.0, 12);
    let f = vec![0.0; m.n_vertices()];
    let eta = absolute_vorticity(&m, &u, &f);
    let circ: f64 = eta.iter().zip(&m.area_vertex).map(|(x, a)| x * a).sum();
    let cscale: f64 = u.iter().zip(&m.dual_edge_length).map(|(x, d)| (x * d).abs()).sum();
    assert!(circ.abs() <= 1e-12 * cscale, "Σ A_v ζ = {circ}");
}

#[test]
fn mass_tendency_vanishes_on_full_mesh() {
    let m = refined_fixture();
    let s = statics(&m, 1);
    let h = random_field(m.n_cells(), 4000.0, 6000.0, 2);
    let u = random_field(m.n_edges(), -20.0, 20.0, 3);
    let all_c: Vec<usize> = (0..m.n_cells()).collect();
    let t = tendencies(&m, &h, &u, &s, &all_c, &[]).unwrap();
    let total: f64 = t.dh.iter().zip(&m.area_cell).map(|(d, a)| d * a).sum();
    let scale: f64 = t.dh.iter().zip(&m.area_cell).map(|(d, a)| (d * a).abs()).sum();
    assert!(total.abs() <= 1e-12 * scale);
}

#[test]
fn field_dump_has_one_row_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("f.csv");
    write_field_dump(&p, &[1.0, 2.0], &[0.5], &[]).unwrap();
    let text = std::fs::read_to_string(&p).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "kind,id,value");
    assert_eq!(lines.len(), 4);
    assert!(lines[3].starts_with("edge,0,5.0"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn linear_operators_are_linear(alpha in -3.0f64..3.0, beta in -3.0f64..3.0, s1 in 0u64..1000, s2 in 0u64..1000) {
        let m = level0();
        let x = random_field(m.n_edges(), -1.0, 1.0, s1);
        let y = random_field(m.n_edges(), -1.0, 1.0, s2 + 5000);
        let comb: Vec<f64> = x.iter().zip(&y).map(|(a, b)| alpha * a + beta * b).collect();
        let ops: [fn(&VoronoiMesh, &[f64]) -> Vec<f64>; 2] = [divergence, perp_flux];
        for op in ops {
            let lhs = op(&m, &comb);
            let rhs: Vec<f64> = op(&m, &x).iter().zip(op(&m, &y)).map(|(a, b)| alpha * a + beta * b).collect();
            prop_assert!(rel_diff(&lhs, &rhs, 1e-30) < 1e-12);
        }
        let cx = random_field(m.n_cells(), -1.0, 1.0, s1 + 9000);
        let cy = random_field(m.n_cells(), -1.0, 1.0, s2 + 9500);
        let cc: Vec<f64> = cx.iter().zip(&cy).map(|(a, b)| alpha * a + beta * b).collect();
        let lhs = gradient(&m, &cc);
        let rhs: Vec<f64> = gradient(&m, &cx).iter().zip(gradient(&m, &cy)).map(|(a, b)| alpha * a + beta * b).collect();
        prop_assert!(rel_diff(&lhs, &rhs, 1e-30) < 1e-12);
    }

    #[test]
    fn kinetic_energy_is_quadratic(seed in 0u64..1000) {
        let m = level0();
        let u = random_field(m.n_edges(), -10.0, 10.0, seed);
        let u2: Vec<f64> = u.iter().map(|x| 2.0 * x).collect();
        let k = kinetic_energy(&m, &u);
        let k2 = kinetic_energy(&m, &u2);
        for (a, b) in k.iter().zip(&k2) {
            prop_assert!(*a >= 0.0);
            prop_assert!((b - 4.0 * a).abs() <= 1e-12 * b.abs());
        }
    }
}

#[test]
fn field_dump_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("f.csv");
    let (c, e, v) = (random_field(5, -1.0, 1.0, 1), random_field(7, 0.0, 1e9, 2), vec![]);
    write_field_dump(&p, &c, &e, &v).unwrap();
    assert_eq!(read_field_dump(&p).unwrap(), (c, e, v));

    std::fs::write(&p, "# note\nkind,id,value\ncell,0,1.0\ncell,2,1.0\n").unwrap();
    match read_field_dump(&p) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
        other => panic!("{other:?}"),
    }
    std::fs::write(&p, "kind,id,value\nface,0,1.0\n").unwrap();
    assert!(matches!(read_field_dump(&p), Err(Error::Parse { line: 2, .. })));
}
