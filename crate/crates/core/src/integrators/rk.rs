use super::{Mask, State, TendencyEngine};
use crate::error::{Error, Result};

/// `(ω_old, ω_1st, ω_rhs)` of the second SSPRK stage.
pub fn ssprk_weights(order: usize) -> Result<(f64, f64, f64)> {
    match order {
        2 => Ok((0.5, 0.5, 0.5)),
        3 => Ok((0.75, 0.25, 0.25)),
        _ => Err(Error::Usage(format!("SSPRK order must be 2 or 3, got {order}"))),
    }
}

/// One SSPRK step of size `dt` on the whole mesh.
pub fn ssprk_step(order: usize, engine: &mut dyn TendencyEngine, state: &State, dt: f64) -> Result<State> {
    let (wo, w1, wr) = ssprk_weights(order)?;
    let (nc, ne) = (state.h.len(), state.u.len());
    let mut kh = vec![0.0; nc];
    let mut ku = vec![0.0; ne];

    engine.eval(Mask::ALL, 0, &state.h, &state.u, &mut kh, &mut ku)?;
    let h1: Vec<f64> = (0..nc).map(|i| state.h[i] + dt * kh[i]).collect();
    let u1: Vec<f64> = (0..ne).map(|e| state.u[e] + dt * ku[e]).collect();

    engine.eval(Mask::ALL, 1, &h1, &u1, &mut kh, &mut ku)?;
    let h2: Vec<f64> = (0..nc).map(|i| wo * state.h[i] + w1 * h1[i] + wr * dt * kh[i]).collect();
    let u2: Vec<f64> = (0..ne).map(|e| wo * state.u[e] + w1 * u1[e] + wr * dt * ku[e]).collect();
    if order == 2 {
        return Ok(State {
            h: h2,
            u: u2,
            time: state.time + dt,
        });
    }

    engine.eval(Mask::ALL, 2, &h2, &u2, &mut kh, &mut ku)?;
    let (a, b) = (1.0 / 3.0, 2.0 / 3.0);
    Ok(State {
        h: (0..nc).map(|i| a * state.h[i] + b * h2[i] + b * dt * kh[i]).collect(),
        u: (0..ne).map(|e| a * state.u[e] + b * u2[e] + b * dt * ku[e]).collect(),
        time: state.time + dt,
    })
}

/// Classical four-stage Runge–Kutta step.
pub fn rk4_step(engine: &mut dyn TendencyEngine, state: &State, dt: f64) -> Result<State> {
    let (nc, ne) = (state.h.len(), state.u.len());
    let mut acc_h = vec![0.0; nc];
    let mut acc_u = vec![0.0; ne];
    let mut kh = vec![0.0; nc];
    let mut ku = vec![0.0; ne];
    let mut h = state.h.clone();
    let mut u = state.u.clone();
    let stage_dt = [0.5 * dt, 0.5 * dt, dt, 0.0];
    let weight = [1.0, 2.0, 2.0, 1.0];
    for s in 0..4 {
        engine.eval(Mask::ALL, s, &h, &u, &mut kh, &mut ku)?;
        for i in 0..nc {
            acc_h[i] += weight[s] * kh[i];
            h[i] = state.h[i] + stage_dt[s] * kh[i];
        }
        for e in 0..ne {
            acc_u[e] += weight[s] * ku[e];
            u[e] = state.u[e] + stage_dt[s] * ku[e];
        }
    }
    let c = dt / 6.0;
    Ok(State {
        h: (0..nc).map(|i| state.h[i] + c * acc_h[i]).collect(),
        u: (0..ne).map(|e| state.u[e] + c * acc_u[e]).collect(),
        time: state.time + dt,
    })
}
