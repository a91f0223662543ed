//! Brute-force reference implementations shared by the integration tests.
//! They work from positions and cell ids directly rather than the mesh's
//! precomputed sign and weight tables.
#![allow(dead_code)]

use std::cell::RefCell;
use std::f64::consts::PI;
use std::rc::Rc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trisk_lts::mesh::sphere::{self, Vec3};
use trisk_lts::VoronoiMesh;

pub fn random_field(n: usize, lo: f64, hi: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(lo..hi)).collect()
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, &x| a.max(x.abs()))
}

/// `max|a-b| / max|b|`, with `max|b|` floored at `tiny`.
pub fn rel_diff(a: &[f64], b: &[f64], tiny: f64) -> f64 {
    assert_eq!(a.len(), b.len());
    let d = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    d / max_abs(b).max(tiny)
}

fn cells_of(m: &VoronoiMesh, e: usize) -> [usize; 2] {
    m.cells_on_edge[e]
}

/// `n_{e,c}` from the id rule.
pub fn n_of(m: &VoronoiMesh, e: usize, c: usize) -> f64 {
    let [a, b] = cells_of(m, e);
    let other = if c == a { b } else { a };
    if c > other {
        1.0
    } else {
        -1.0
    }
}

/// Foot of the perpendicular from `x` onto the great circle carrying edge `e`.
fn foot(m: &VoronoiMesh, x: Vec3, e: usize) -> Vec3 {
    let [v0, v1] = m.vertices_on_edge[e];
    let n = m.vertex_pos[v0].cross(m.vertex_pos[v1]).normalized();
    (x - n * n.dot(x)).normalized()
}

/// `t_{e,v}` from positions: +1 when `v` lies along `k × n_e`.
pub fn t_of(m: &VoronoiMesh, e: usize, v: usize) -> f64 {
    let [a, b] = cells_of(m, e);
    let normal = m.cell_center[a.min(b)] - m.cell_center[a.max(b)];
    let [v0, v1] = m.vertices_on_edge[e];
    let other = if v == v0 { v1 } else { v0 };
    // x_e can lie outside the primal edge, so compare against the other vertex.
    let xe = foot(m, m.cell_center[a], e);
    if (m.vertex_pos[v] - m.vertex_pos[other]).dot(xe.cross(normal)) > 0.0 {
        1.0
    } else {
        -1.0
    }
}

fn edges_around(m: &VoronoiMesh, cell: usize) -> Vec<usize> {
    (0..m.n_edges()).filter(|&a| cells_of(m, a).contains(&cell)).collect()
}

fn shared_vertex(m: &VoronoiMesh, a: usize, b: usize) -> Option<usize> {
    let va = m.vertices_on_edge[a];
    va.iter().copied().find(|v| m.vertices_on_edge[b].contains(v))
}

/// Kite of `cell` at vertex `v` (unit sphere).
pub fn kite(m: &VoronoiMesh, cell: usize, v: usize) -> f64 {
    let xi = m.cell_center[cell];
    let es: Vec<usize> = edges_around(m, cell)
        .into_iter()
        .filter(|&a| m.vertices_on_edge[a].contains(&v))
        .collect();
    assert_eq!(es.len(), 2);
    let xv = m.vertex_pos[v];
    // Signed area of the quadrilateral (x_i, x_a, x_v, x_b), with the edges
    // ordered counter-clockwise around x_i by their far vertices: a foot lying
    // past x_v on its edge subtracts instead of adds.
    let far = |a: usize| m.vertices_on_edge[a].into_iter().find(|&w| w != v).unwrap();
    let (a, b) = if sphere::signed_triangle_area(xi, m.vertex_pos[far(es[0])], xv) > 0.0 {
        (es[0], es[1])
    } else {
        (es[1], es[0])
    };
    sphere::signed_triangle_area(xi, foot(m, xi, a), xv) + sphere::signed_triangle_area(xi, xv, foot(m, xi, b))
}

/// `w_{e,e'}` walked from the definition on a ring sorted by angle.
pub fn oracle_weight(m: &VoronoiMesh, e: usize, ep: usize) -> f64 {
    let cell = *cells_of(m, e).iter().find(|c| cells_of(m, ep).contains(c)).unwrap();
    let xi = m.cell_center[cell];
    let [a0, a1] = cells_of(m, e);
    let ref_dir = sphere::tangent_toward(xi, m.cell_center[a0 + a1 - cell]);
    let angle = |p: Vec3| {
        let d = sphere::tangent_toward(xi, p);
        xi.cross(ref_dir).dot(d).atan2(ref_dir.dot(d)).rem_euclid(2.0 * PI)
    };
    let mut edges = edges_around(m, cell);
    edges.sort_by(|&a, &b| angle(foot(m, xi, a)).partial_cmp(&angle(foot(m, xi, b))).unwrap());
    let k = edges.len();
    let vertex_after = |j: usize| shared_vertex(m, edges[j], edges[(j + 1) % k]).unwrap();
    let total: f64 = (0..k).map(|j| kite(m, cell, vertex_after(j))).sum();
    let ja = edges.iter().position(|&a| a == ep).unwrap();
    let jb = edges.iter().position(|&a| a == e).unwrap();
    let mut frac = 0.0;
    let mut j = ja;
    while j != jb {
        frac += kite(m, cell, vertex_after(j)) / total;
        j = (j + 1) % k;
    }
    let v_star = vertex_after((jb + k - 1) % k);
    n_of(m, ep, cell) * t_of(m, e, v_star) * (frac - 0.5)
}

/// `EE(e)` from the definition: other edges of the two cells of `e`.
pub fn trisk_neighbours(m: &VoronoiMesh, e: usize) -> Vec<usize> {
    let cells = cells_of(m, e);
    (0..m.n_edges())
        .filter(|&a| a != e && cells_of(m, a).iter().any(|c| cells.contains(c)))
        .collect()
}

pub fn flux(m: &VoronoiMesh, h: &[f64], u: &[f64]) -> Vec<f64> {
    (0..m.n_edges())
        .map(|e| {
            let [a, b] = cells_of(m, e);
            (h[a] + h[b]) / 2.0 * u[e]
        })
        .collect()
}

pub fn divergence(m: &VoronoiMesh, f: &[f64]) -> Vec<f64> {
    let mut acc = vec![0.0; m.n_cells()];
    for e in 0..m.n_edges() {
        for c in cells_of(m, e) {
            acc[c] += n_of(m, e, c) * m.edge_length[e] * f[e];
        }
    }
    acc.iter().zip(&m.area_cell).map(|(s, a)| s / a).collect()
}

pub fn gradient(m: &VoronoiMesh, phi: &[f64]) -> Vec<f64> {
    (0..m.n_edges())
        .map(|e| {
            let [a, b] = cells_of(m, e);
            let (lo, hi) = (a.min(b), a.max(b));
            (phi[lo] - phi[hi]) / m.dual_edge_length[e]
        })
        .collect()
}

pub fn kinetic_energy(m: &VoronoiMesh, u: &[f64]) -> Vec<f64> {
    let mut acc = vec![0.0; m.n_cells()];
    for e in 0..m.n_edges() {
        for c in cells_of(m, e) {
            acc[c] += m.edge_length[e] * m.dual_edge_length[e] * u[e] * u[e];
        }
    }
    acc.iter().zip(&m.area_cell).map(|(s, a)| s / (4.0 * a)).collect()
}

/// Dual triangle area (m²) from the three cell centers.
pub fn dual_area(m: &VoronoiMesh, v: usize) -> f64 {
    let [a, b, c] = m.cells_on_vertex[v];
    let x = &m.cell_center;
    sphere::triangle_area(x[a], x[b], x[c]) * m.radius * m.radius
}

pub fn absolute_vorticity(m: &VoronoiMesh, u: &[f64], f: &[f64]) -> Vec<f64> {
    let mut circ = vec![0.0; m.n_vertices()];
    for e in 0..m.n_edges() {
        for v in m.vertices_on_edge[e] {
            circ[v] += t_of(m, e, v) * m.dual_edge_length[e] * u[e];
        }
    }
    (0..m.n_vertices()).map(|v| f[v] + circ[v] / dual_area(m, v)).collect()
}

pub fn vertex_thickness(m: &VoronoiMesh, h: &[f64]) -> Vec<f64> {
    let r2 = m.radius * m.radius;
    (0..m.n_vertices())
        .map(|v| {
            let s: f64 = m.cells_on_vertex[v].iter().map(|&c| kite(m, c, v) * r2 * h[c]).sum();
            s / dual_area(m, v)
        })
        .collect()
}

pub fn potential_vorticity(m: &VoronoiMesh, h: &[f64], u: &[f64], f: &[f64]) -> Vec<f64> {
    let eta = absolute_vorticity(m, u, f);
    let hv = vertex_thickness(m, h);
    eta.iter().zip(&hv).map(|(a, b)| a / b).collect()
}

type WeightTable = Rc<Vec<Vec<(usize, f64)>>>;

thread_local! {
    static WEIGHTS: RefCell<Option<(usize, Vec<u64>, WeightTable)>> = const { RefCell::new(None) };
}

/// `(e', w_{e,e'})` for every edge, memoised for the last mesh seen: the
/// brute-force weights are quadratic in the edge count.
pub fn weight_table(m: &VoronoiMesh) -> WeightTable {
    let key: Vec<u64> = m.cell_center.iter().flat_map(|p| [p.x.to_bits(), p.y.to_bits(), p.z.to_bits()]).collect();
    WEIGHTS.with(|cache| {
        if let Some((n, k, t)) = &*cache.borrow() {
            if *n == m.n_edges() && *k == key {
                return t.clone();
            }
        }
        let table: WeightTable = Rc::new(
            (0..m.n_edges())
                .map(|e| trisk_neighbours(m, e).into_iter().map(|ep| (ep, oracle_weight(m, e, ep))).collect())
                .collect(),
        );
        *cache.borrow_mut() = Some((m.n_edges(), key, table.clone()));
        table
    })
}

pub fn perp_flux(m: &VoronoiMesh, f: &[f64]) -> Vec<f64> {
    let w = weight_table(m);
    (0..m.n_edges())
        .map(|e| w[e].iter().map(|&(ep, wt)| wt * m.edge_length[ep] / m.dual_edge_length[e] * f[ep]).sum())
        .collect()
}

pub fn pv_flux(m: &VoronoiMesh, q: &[f64], f: &[f64]) -> Vec<f64> {
    let qe: Vec<f64> = (0..m.n_edges())
        .map(|e| {
            let [v0, v1] = m.vertices_on_edge[e];
            (q[v0] + q[v1]) / 2.0
        })
        .collect();
    let w = weight_table(m);
    (0..m.n_edges())
        .map(|e| {
            w[e].iter()
                .map(|&(ep, wt)| wt * m.edge_length[ep] / m.dual_edge_length[e] * f[ep] * (qe[e] + qe[ep]) / 2.0)
                .sum()
        })
        .collect()
}

/// Monolithic right-hand side `(dh, du)`.
pub fn rhs(m: &VoronoiMesh, h: &[f64], u: &[f64], b: &[f64], fcor: &[f64], g: f64) -> (Vec<f64>, Vec<f64>) {
    let fl = flux(m, h, u);
    let dh: Vec<f64> = divergence(m, &fl).iter().map(|x| -x).collect();
    let q = potential_vorticity(m, h, u, fcor);
    let pv = pv_flux(m, &q, &fl);
    let surface: Vec<f64> = h.iter().zip(b).map(|(x, y)| g * (x + y)).collect();
    let ke = kinetic_energy(m, u);
    let bern: Vec<f64> = surface.iter().zip(&ke).map(|(s, k)| s + k).collect();
    let gb = gradient(m, &bern);
    let du = pv.iter().zip(&gb).map(|(p, gr)| -p - gr).collect();
    (dh, du)
}

/// Refined level-`level` mesh with fine cells picked by size and width-1 interfaces.
pub fn lts_fixture(level: u32) -> (VoronoiMesh, trisk_lts::RegionMap) {
    use trisk_lts::mesh::{generate_refined_mesh, RefineSpec, DEFAULT_RADIUS};
    let spec = RefineSpec {
        center: (1.5 * PI, PI / 6.0),
        radius: 0.2,
        factor: 4,
    };
    let m = generate_refined_mesh(level, spec, 0, DEFAULT_RADIUS).unwrap();
    let fine = trisk_lts::regions::fine_by_size(&m, 0.35);
    let map = trisk_lts::regions::build_region_map(&m, |i| fine[i], 1).unwrap();
    (m, map)
}

/// Straight transcription of the LTS step on whole-mesh arrays, using the
/// monolithic [`rhs`] for every evaluation. Returns the new state and the
/// number of cell and edge targets each evaluation was responsible for.
#[allow(clippy::too_many_arguments)]
pub fn oracle_lts(
    order: usize,
    m: &VoronoiMesh,
    map: &trisk_lts::RegionMap,
    b: &[f64],
    fcor: &[f64],
    g: f64,
    h: &[f64],
    u: &[f64],
    dt: f64,
    mm: usize,
) -> (Vec<f64>, Vec<f64>, u64, u64) {
    use trisk_lts::regions::{CellLabel as L, EdgeLabel as E};
    let third = order == 3;
    let cl = |i: usize| map.cell_label[i];
    let el = |e: usize| map.edge_label[e];
    let uf = |i: usize| map.is_underline_fine(i);
    let nc = m.n_cells();
    let ne = m.n_edges();
    let (wo, w1, wr) = if third { (0.75, 0.25, 0.25) } else { (0.5, 0.5, 0.5) };
    let mut n_cells = 0u64;
    let mut n_edges = 0u64;
    let mut eval = |hh: &[f64], uu: &[f64], cset: &dyn Fn(usize) -> bool, eset: &dyn Fn(usize) -> bool| {
        n_cells += (0..nc).filter(|&i| cset(i)).count() as u64;
        n_edges += (0..ne).filter(|&e| eset(e)).count() as u64;
        rhs(m, hh, uu, b, fcor, g)
    };

    let s1c = |i: usize| matches!(cl(i), L::Interface1 | L::Interface2 | L::Coarse) || (third && uf(i));
    let s1e = |e: usize| matches!(el(e), E::Interface1 | E::Interface2 | E::Coarse) || (third && el(e) == E::UnderlineFine);
    let (kh, ku) = eval(h, u, &s1c, &s1e);
    let mut h1 = h.to_vec();
    let mut u1 = u.to_vec();
    for i in (0..nc).filter(|&i| s1c(i)) {
        h1[i] = h[i] + dt * kh[i];
    }
    for e in (0..ne).filter(|&e| s1e(e)) {
        u1[e] = u[e] + dt * ku[e];
    }

    let s2c = |i: usize| cl(i) == L::Coarse || (third && matches!(cl(i), L::Interface1 | L::Interface2));
    let s2e = |e: usize| el(e) == E::Coarse || (third && matches!(el(e), E::Interface1 | E::Interface2));
    let (kh, ku) = eval(&h1, &u1, &s2c, &s2e);
    let mut h2 = h.to_vec();
    let mut u2 = u.to_vec();
    for i in (0..nc).filter(|&i| s2c(i)) {
        h2[i] = wo * h[i] + w1 * h1[i] + wr * dt * kh[i];
    }
    for e in (0..ne).filter(|&e| s2e(e)) {
        u2[e] = wo * u[e] + w1 * u1[e] + wr * dt * ku[e];
    }

    let fc = |i: usize| cl(i) == L::Fine;
    let fe = |e: usize| matches!(el(e), E::Fine | E::UnderlineFine);
    let ic = |i: usize| matches!(cl(i), L::Interface1 | L::Interface2);
    let ie = |e: usize| matches!(el(e), E::Interface1 | E::Interface2);
    let subc = |i: usize| fc(i) || ic(i);
    let sube = |e: usize| fe(e) || ie(e);
    let (mf, dtf) = (mm as f64, dt / mm as f64);
    let mut acc_h = vec![vec![0.0; nc]; 3];
    let mut acc_u = vec![vec![0.0; ne]; 3];
    let (mut ho, mut uo) = (h.to_vec(), u.to_vec());
    let (mut hs1, mut us1) = (h1.clone(), u1.clone());
    let (mut hs2, mut us2) = (h2.clone(), u2.clone());
    let predict = |x: f64, xt: f64, hh: &mut [f64], uu: &mut [f64]| {
        for i in (0..nc).filter(|&i| cl(i) == L::Interface1) {
            hh[i] = (1.0 - x - xt) * h[i] + (x - xt) * h1[i] + 2.0 * xt * h2[i];
        }
        for e in (0..ne).filter(|&e| el(e) == E::Interface1) {
            uu[e] = (1.0 - x - xt) * u[e] + (x - xt) * u1[e] + 2.0 * xt * u2[e];
        }
    };
    for k in 0..mm {
        let kf = k as f64;
        let alpha_t = if third { kf * kf / (mf * mf) } else { 0.0 };
        predict(kf / mf, alpha_t, &mut ho, &mut uo);
        let (kh, ku) = eval(&ho, &uo, &subc, &sube);
        for i in (0..nc).filter(|&i| ic(i)) {
            acc_h[0][i] += kh[i];
        }
        for e in (0..ne).filter(|&e| ie(e)) {
            acc_u[0][e] += ku[e];
        }
        for i in (0..nc).filter(|&i| fc(i)) {
            hs1[i] = ho[i] + dtf * kh[i];
        }
        for e in (0..ne).filter(|&e| fe(e)) {
            us1[e] = uo[e] + dtf * ku[e];
        }

        let beta_t = if third { kf * (kf + 2.0) / (mf * mf) } else { 0.0 };
        predict((kf + 1.0) / mf, beta_t, &mut hs1, &mut us1);
        let (kh, ku) = eval(&hs1, &us1, &subc, &sube);
        for i in (0..nc).filter(|&i| ic(i)) {
            acc_h[1][i] += kh[i];
        }
        for e in (0..ne).filter(|&e| ie(e)) {
            acc_u[1][e] += ku[e];
        }
        // Second fine stage, from this substep's own start value.
        let (mut nh, mut nu) = (ho.clone(), uo.clone());
        for i in (0..nc).filter(|&i| fc(i)) {
            nh[i] = wo * ho[i] + w1 * hs1[i] + wr * dtf * kh[i];
        }
        for e in (0..ne).filter(|&e| fe(e)) {
            nu[e] = wo * uo[e] + w1 * us1[e] + wr * dtf * ku[e];
        }
        if third {
            for i in (0..nc).filter(|&i| fc(i)) {
                hs2[i] = nh[i];
            }
            for e in (0..ne).filter(|&e| fe(e)) {
                us2[e] = nu[e];
            }
            predict((2.0 * kf + 1.0) / (2.0 * mf), (2.0 * kf * kf + 2.0 * kf + 1.0) / (2.0 * mf * mf), &mut hs2, &mut us2);
            let (kh, ku) = eval(&hs2, &us2, &subc, &sube);
            for i in (0..nc).filter(|&i| ic(i)) {
                acc_h[2][i] += kh[i];
            }
            for e in (0..ne).filter(|&e| ie(e)) {
                acc_u[2][e] += ku[e];
            }
            for i in (0..nc).filter(|&i| fc(i)) {
                nh[i] = ho[i] / 3.0 + 2.0 / 3.0 * hs2[i] + 2.0 / 3.0 * dtf * kh[i];
            }
            for e in (0..ne).filter(|&e| fe(e)) {
                nu[e] = uo[e] / 3.0 + 2.0 / 3.0 * us2[e] + 2.0 / 3.0 * dtf * ku[e];
            }
        }
        for i in (0..nc).filter(|&i| fc(i)) {
            ho[i] = nh[i];
        }
        for e in (0..ne).filter(|&e| fe(e)) {
            uo[e] = nu[e];
        }
    }

    let mut hn = ho;
    let mut un = uo;
    if third {
        let cc = |i: usize| cl(i) == L::Coarse;
        let ce = |e: usize| el(e) == E::Coarse;
        let (kh, ku) = eval(&h2, &u2, &cc, &ce);
        for i in (0..nc).filter(|&i| cc(i)) {
            hn[i] = h[i] / 3.0 + 2.0 / 3.0 * h2[i] + 2.0 / 3.0 * dt * kh[i];
        }
        for e in (0..ne).filter(|&e| ce(e)) {
            un[e] = u[e] / 3.0 + 2.0 / 3.0 * u2[e] + 2.0 / 3.0 * dt * ku[e];
        }
    } else {
        for i in (0..nc).filter(|&i| cl(i) == L::Coarse) {
            hn[i] = h2[i];
        }
        for e in (0..ne).filter(|&e| el(e) == E::Coarse) {
            un[e] = u2[e];
        }
    }
    let theta: [f64; 3] = if third { [1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0] } else { [0.5, 0.5, 0.0] };
    for i in (0..nc).filter(|&i| ic(i)) {
        hn[i] = h[i] + dtf * (theta[0] * acc_h[0][i] + theta[1] * acc_h[1][i] + theta[2] * acc_h[2][i]);
    }
    for e in (0..ne).filter(|&e| ie(e)) {
        un[e] = u[e] + dtf * (theta[0] * acc_u[0][e] + theta[1] * acc_u[1][e] + theta[2] * acc_u[2][e]);
    }
    (hn, un, n_cells, n_edges)
}
