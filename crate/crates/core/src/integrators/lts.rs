//! LTS2/LTS3: coarse and interface cells take one SSPRK step of size `dt`
//! while fine cells take `M` steps of size `dt/M`. Interface-1 values at
//! fine substeps are predicted from the coarse stage values; tendencies on
//! both interface bands are accumulated over the substeps and replace the
//! interface values at the end, which makes the scheme exactly conservative.

use super::rk::ssprk_weights;
use super::{Mask, State, TendencyEngine};
use crate::error::{Error, Result};
use crate::ledger::Zone;

/// Interface-1 prediction weights `(c_old, c_1st, c_2nd)` for `stage`
/// (1-based) of fine substep `k` out of `m`.
pub fn lts_interp_coeffs(order: usize, stage: usize, k: usize, m: usize) -> Result<(f64, f64, f64)> {
    if !(order == 2 || order == 3) {
        return Err(Error::Usage(format!("LTS order must be 2 or 3, got {order}")));
    }
    if m == 0 || k >= m {
        return Err(Error::Usage(format!("substep {k} out of range for M = {m}")));
    }
    let (kf, mf) = (k as f64, m as f64);
    let third = order == 3;
    let (x, xt) = match stage {
        1 => (kf / mf, if third { kf * kf / (mf * mf) } else { 0.0 }),
        2 => ((kf + 1.0) / mf, if third { kf * (kf + 2.0) / (mf * mf) } else { 0.0 }),
        3 if third => ((2.0 * kf + 1.0) / (2.0 * mf), (2.0 * kf * kf + 2.0 * kf + 1.0) / (2.0 * mf * mf)),
        _ => return Err(Error::Usage(format!("LTS{order} has no stage {stage}"))),
    };
    Ok((1.0 - x - xt, x - xt, 2.0 * xt))
}

/// Interface correction weights `(θ_1st, θ_2nd, θ_3rd)`.
pub fn theta(order: usize) -> Result<(f64, f64, f64)> {
    match order {
        2 => Ok((0.5, 0.5, 0.0)),
        3 => Ok((1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0)),
        _ => Err(Error::Usage(format!("LTS order must be 2 or 3, got {order}"))),
    }
}

/// Coarse-step stage values shared by every substep.
struct Stages {
    old: State,
    h1: Vec<f64>,
    u1: Vec<f64>,
    h2: Vec<f64>,
    u2: Vec<f64>,
}

impl Stages {
    /// Overwrites interface-1 entries of `(h, u)` with the prediction.
    fn predict(&self, eng: &dyn TendencyEngine, c: (f64, f64, f64), h: &mut [f64], u: &mut [f64]) {
        let (a, b, g) = c;
        let z = eng.zones();
        for i in z.cells(Zone::Interface1.bit()) {
            h[i] = a * self.old.h[i] + b * self.h1[i] + g * self.h2[i];
        }
        for e in z.edges(Zone::Interface1.bit()) {
            u[e] = a * self.old.u[e] + b * self.u1[e] + g * self.u2[e];
        }
    }
}

/// One LTS coarse step of size `dt` with `m` fine substeps.
pub fn lts_step(order: usize, engine: &mut dyn TendencyEngine, state: &State, dt: f64, m: usize) -> Result<State> {
    let (wo, w1, wr) = ssprk_weights(order)?;
    let (th1, th2, th3) = theta(order)?;
    if m == 0 {
        return Err(Error::Config("M must be at least 1".into()));
    }
    {
        let z = engine.zones();
        if !z.has_regions() {
            return Err(Error::Config("local time stepping needs a region map".into()));
        }
        let fine = z.n_cells_in(Zone::FineInner) + z.n_cells_in(Zone::UnderlineFine);
        if order == 3 && fine > 0 && z.n_cells_in(Zone::UnderlineFine) == 0 {
            return Err(Error::Config("LTS3 needs underline-fine cells next to interface 1".into()));
        }
    }
    let third = order == 3;
    let (nc, ne) = (state.h.len(), state.u.len());
    let mut kh = vec![0.0; nc];
    let mut ku = vec![0.0; ne];

    use Zone::*;
    let interfaces = Mask::of(&[Interface1, Interface2]);
    let fine = Mask::of(&[FineInner, UnderlineFine]);
    let coarse = Mask::of(&[Coarse]);
    let step1 = if third {
        Mask::of(&[UnderlineFine, Interface1, Interface2, Coarse])
    } else {
        Mask::of(&[Interface1, Interface2, Coarse])
    };
    let step2 = if third { Mask::of(&[Interface1, Interface2, Coarse]) } else { coarse };
    let substep = Mask::of(&[FineInner, UnderlineFine, Interface1, Interface2]);

    // Step 1: first stage on coarse, interfaces (and underline-fine for LTS3).
    let mut st = Stages {
        old: state.clone(),
        h1: state.h.clone(),
        u1: state.u.clone(),
        h2: state.h.clone(),
        u2: state.u.clone(),
    };
    engine.eval(step1, 0, &state.h, &state.u, &mut kh, &mut ku)?;
    for i in engine.zones().cells(step1.cells) {
        st.h1[i] = state.h[i] + dt * kh[i];
    }
    for e in engine.zones().edges(step1.edges) {
        st.u1[e] = state.u[e] + dt * ku[e];
    }

    // Step 2: second stage on coarse (and interfaces for LTS3).
    engine.eval(step2, 1, &st.h1, &st.u1, &mut kh, &mut ku)?;
    for i in engine.zones().cells(step2.cells) {
        st.h2[i] = wo * state.h[i] + w1 * st.h1[i] + wr * dt * kh[i];
    }
    for e in engine.zones().edges(step2.edges) {
        st.u2[e] = wo * state.u[e] + w1 * st.u1[e] + wr * dt * ku[e];
    }

    // Step 3: fine substeps with running interface tendency sums.
    let dtf = dt / m as f64;
    let (mut h0, mut u0) = (state.h.clone(), state.u.clone());
    let (mut hs1, mut us1) = (st.h1.clone(), st.u1.clone());
    let (mut hs2, mut us2) = (st.h2.clone(), st.u2.clone());
    let mut acc_h = [vec![0.0; nc], vec![0.0; nc], vec![0.0; nc]];
    let mut acc_u = [vec![0.0; ne], vec![0.0; ne], vec![0.0; ne]];
    let fine_cells: Vec<usize> = engine.zones().cells(fine.cells).collect();
    let fine_edges: Vec<usize> = engine.zones().edges(fine.edges).collect();
    let if_cells: Vec<usize> = engine.zones().cells(interfaces.cells).collect();
    let if_edges: Vec<usize> = engine.zones().edges(interfaces.edges).collect();
    let accumulate = |acc_h: &mut Vec<f64>, acc_u: &mut Vec<f64>, kh: &[f64], ku: &[f64]| {
        for &i in &if_cells {
            acc_h[i] += kh[i];
        }
        for &e in &if_edges {
            acc_u[e] += ku[e];
        }
    };
    for k in 0..m {
        st.predict(engine, lts_interp_coeffs(order, 1, k, m)?, &mut h0, &mut u0);
        engine.eval(substep, 0, &h0, &u0, &mut kh, &mut ku)?;
        accumulate(&mut acc_h[0], &mut acc_u[0], &kh, &ku);
        for &i in &fine_cells {
            hs1[i] = h0[i] + dtf * kh[i];
        }
        for &e in &fine_edges {
            us1[e] = u0[e] + dtf * ku[e];
        }

        st.predict(engine, lts_interp_coeffs(order, 2, k, m)?, &mut hs1, &mut us1);
        engine.eval(substep, 1, &hs1, &us1, &mut kh, &mut ku)?;
        accumulate(&mut acc_h[1], &mut acc_u[1], &kh, &ku);
        if !third {
            for &i in &fine_cells {
                h0[i] = wo * h0[i] + w1 * hs1[i] + wr * dtf * kh[i];
            }
            for &e in &fine_edges {
                u0[e] = wo * u0[e] + w1 * us1[e] + wr * dtf * ku[e];
            }
            continue;
        }
        for &i in &fine_cells {
            hs2[i] = wo * h0[i] + w1 * hs1[i] + wr * dtf * kh[i];
        }
        for &e in &fine_edges {
            us2[e] = wo * u0[e] + w1 * us1[e] + wr * dtf * ku[e];
        }

        st.predict(engine, lts_interp_coeffs(order, 3, k, m)?, &mut hs2, &mut us2);
        engine.eval(substep, 2, &hs2, &us2, &mut kh, &mut ku)?;
        accumulate(&mut acc_h[2], &mut acc_u[2], &kh, &ku);
        let (a, b) = (1.0 / 3.0, 2.0 / 3.0);
        for &i in &fine_cells {
            h0[i] = a * h0[i] + b * hs2[i] + b * dtf * kh[i];
        }
        for &e in &fine_edges {
            u0[e] = a * u0[e] + b * us2[e] + b * dtf * ku[e];
        }
    }

    let mut new = State {
        h: state.h.clone(),
        u: state.u.clone(),
        time: state.time + dt,
    };
    for &i in &fine_cells {
        new.h[i] = h0[i];
    }
    for &e in &fine_edges {
        new.u[e] = u0[e];
    }

    // Step 4: coarse region.
    if third {
        engine.eval(coarse, 2, &st.h2, &st.u2, &mut kh, &mut ku)?;
    }
    let (a, b) = (1.0 / 3.0, 2.0 / 3.0);
    for i in engine.zones().cells(coarse.cells) {
        new.h[i] = if third { a * state.h[i] + b * st.h2[i] + b * dt * kh[i] } else { st.h2[i] };
    }
    for e in engine.zones().edges(coarse.edges) {
        new.u[e] = if third { a * state.u[e] + b * st.u2[e] + b * dt * ku[e] } else { st.u2[e] };
    }

    // Step 5: interface correction.
    for &i in &if_cells {
        new.h[i] = state.h[i] + dtf * (th1 * acc_h[0][i] + th2 * acc_h[1][i] + th3 * acc_h[2][i]);
    }
    for &e in &if_edges {
        new.u[e] = state.u[e] + dtf * (th1 * acc_u[0][e] + th2 * acc_u[1][e] + th3 * acc_u[2][e]);
    }
    Ok(new)
}
