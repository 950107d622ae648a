use rayon::prelude::*;

use super::InitialData;
use crate::characteristics::{march_with, FieldSampler};
use crate::equilibria::EquilibriumProfile;
use crate::error::{Error, Result};
use crate::snapshot::PhaseSnapshot;
use crate::spacetime::VelocityGrid;
use crate::spectral_field::PeriodicGrid;

fn mu(profile: &EquilibriumProfile, v: [f64; 2]) -> f64 {
    profile.eval_mu(v).unwrap_or(0.0)
}

/// `(Y_{0,t}, W_{0,t})` at a sheared point `(x', v)`.
fn limits_at(flows: &FieldSampler, t: f64, xs: [f64; 2], v: [f64; 2]) -> Result<([f64; 2], [f64; 2])> {
    let mut out = ([0.0; 2], [0.0; 2]);
    march_with(flows, 0.0, t, xs, v, |k, _, y, w, _| {
        if k == 0 {
            out = (y, w);
        }
    })?;
    Ok(out)
}

/// `f(t, x, v)` on the phase grid at node `n` of the flow grid.
///
/// Uses `f = f₀(X₀,V₀) + μ(V₀) − μ(v)`: along the characteristics
/// `d/ds μ(V_s) = E·∇μ(V_s)`, so this is the time integral of the reaction
/// term in closed form.
pub fn reconstruct_f(
    flows: &FieldSampler,
    f0: &InitialData,
    profile: &EquilibriumProfile,
    v_grid: VelocityGrid,
    n: usize,
) -> Result<PhaseSnapshot> {
    let grid = flows.grid;
    let t = flows.times.node(n);
    let vs = v_grid.nodes();
    let rows: Vec<Vec<f64>> = (0..grid.len())
        .into_par_iter()
        .map(|ix| {
            let x = grid.point(ix);
            vs.iter()
                .map(|&v| {
                    let xs = [x[0] - t * v[0], x[1] - t * v[1]];
                    let (y, w) = limits_at(flows, t, xs, v)?;
                    let big_v = [v[0] + w[0], v[1] + w[1]];
                    Ok(f0.value_periodic(&grid, [xs[0] + y[0], xs[1] + y[1]], big_v) + (mu(profile, big_v) - mu(profile, v)))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(PhaseSnapshot {
        nx: grid.n,
        nv: v_grid.n,
        half_length: grid.half_length,
        v_max: v_grid.v_max,
        time: t,
        values: rows.concat(),
    })
}

/// `∫ f dv` of a phase snapshot.
pub fn velocity_integral(snap: &PhaseSnapshot) -> Result<Vec<f64>> {
    let vg = VelocityGrid::new(snap.nv, snap.v_max)?;
    let nv2 = snap.nv * snap.nv;
    Ok(snap.values.chunks(nv2).map(|c| c.iter().sum::<f64>() * vg.weight()).collect())
}

/// Limits of the sheared characteristics and the decay towards them.
#[derive(Debug, Clone)]
pub struct ScatteringProfile {
    /// `f_∞(x', v) = f₀(x'+Y_∞, v+W_∞) + μ(v+W_∞) − μ(v)`.
    pub f_inf: PhaseSnapshot,
    pub y_inf_sup: f64,
    pub w_inf_sup: f64,
    /// `sup |Y_{0,T} − Y_{0,T/2}| + sup |W_{0,T} − W_{0,T/2}|`.
    pub limit_change: f64,
    /// `(t, d(t))` with `d(t) = ‖f(t, x+tv, v) − f_∞‖_∞` at dyadic `t < T`, ascending.
    pub decay: Vec<(f64, f64)>,
}

/// Tolerance on the change of the limits between the last two dyadic times.
pub const SCATTERING_TOL: f64 = 1e-6;

/// `(f_∞, Y_∞, W_∞)` from the flow over the whole trajectory. `Y_∞, W_∞` are
/// the values at the final node; `d(t)` is reported at `T/2, T/4, …` down to
/// `min_time`. Fails if the limits at `T/2` and `T` differ by more than
/// [`SCATTERING_TOL`].
pub fn scattering_profile(
    flows: &FieldSampler,
    f0: &InitialData,
    profile: &EquilibriumProfile,
    v_grid: VelocityGrid,
    min_time: f64,
) -> Result<ScatteringProfile> {
    let p = scattering_profile_unchecked(flows, f0, profile, v_grid, min_time)?;
    if p.limit_change > SCATTERING_TOL {
        return Err(Error::ScatteringNotConverged(p.limit_change));
    }
    Ok(p)
}

/// [`scattering_profile`] without the convergence check; `limit_change`
/// says how far the trajectory is from its limits.
pub fn scattering_profile_unchecked(
    flows: &FieldSampler,
    f0: &InitialData,
    profile: &EquilibriumProfile,
    v_grid: VelocityGrid,
    min_time: f64,
) -> Result<ScatteringProfile> {
    let grid: PeriodicGrid = flows.grid;
    let dt = flows.times.dt();
    let last = flows.times.steps;
    let mut dyadic = vec![last];
    while dyadic.last().unwrap() % 2 == 0 && (dyadic.last().unwrap() / 2) as f64 * dt >= min_time.max(dt) {
        let next = dyadic.last().unwrap() / 2;
        dyadic.push(next);
    }
    let vs = v_grid.nodes();
    let points: Vec<([f64; 2], [f64; 2])> =
        (0..grid.len()).flat_map(|ix| vs.iter().map(move |&v| (grid.point(ix), v))).collect();
    let f_at = |(xs, v): ([f64; 2], [f64; 2]), (y, w): ([f64; 2], [f64; 2])| {
        let big_v = [v[0] + w[0], v[1] + w[1]];
        f0.value_periodic(&grid, [xs[0] + y[0], xs[1] + y[1]], big_v) + (mu(profile, big_v) - mu(profile, v))
    };
    let limits = |n: usize| -> Result<Vec<([f64; 2], [f64; 2])>> {
        let t = flows.times.node(n);
        points.par_iter().map(|&(xs, v)| limits_at(flows, t, xs, v)).collect()
    };
    let inf = limits(last)?;
    let f_inf: Vec<f64> = points.iter().zip(&inf).map(|(&p, &l)| f_at(p, l)).collect();
    let sup = |it: &mut dyn Iterator<Item = f64>| it.fold(0.0f64, f64::max);
    let y_inf_sup = sup(&mut inf.iter().map(|l| l.0[0].hypot(l.0[1])));
    let w_inf_sup = sup(&mut inf.iter().map(|l| l.1[0].hypot(l.1[1])));
    let mut decay = Vec::new();
    let mut limit_change = 0.0;
    for (k, &n) in dyadic.iter().enumerate().skip(1) {
        let lim = limits(n)?;
        if k == 1 {
            let dy = sup(&mut lim.iter().zip(&inf).map(|(a, b)| (a.0[0] - b.0[0]).hypot(a.0[1] - b.0[1])));
            let dw = sup(&mut lim.iter().zip(&inf).map(|(a, b)| (a.1[0] - b.1[0]).hypot(a.1[1] - b.1[1])));
            limit_change = dy + dw;
        }
        let d = sup(&mut points.iter().zip(&lim).zip(&f_inf).map(|((&p, &l), fi)| (f_at(p, l) - fi).abs()));
        decay.push((flows.times.node(n), d));
    }
    decay.reverse();
    let f_inf = PhaseSnapshot {
        nx: grid.n,
        nv: v_grid.n,
        half_length: grid.half_length,
        v_max: v_grid.v_max,
        time: flows.times.end(),
        values: f_inf,
    };
    Ok(ScatteringProfile { f_inf, y_inf_sup, w_inf_sup, limit_change, decay })
}
