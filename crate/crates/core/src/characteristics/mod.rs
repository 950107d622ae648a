//! Perturbative characteristics `Y_{s,t}`, `W_{s,t}` in the sheared frame,
//! the straightening inverse `Ψ_{s,t}`, and their weighted diagnostics.
//!
//! With `x' = x - tv`, the backward flow of `v·∇_x + E·∇_v` is
//! `X_{s,t}(x,v) = x - (t-s)v + Y_{s,t}(x',v)` and `V_{s,t}(x,v) = v + W_{s,t}(x',v)`.

mod diagnostics;
mod sampler;

use nalgebra::{Matrix2, Vector2};
use rayon::prelude::*;

use crate::error::{Error, Result};

pub use diagnostics::{flow_diagnostics, geometric_ladder, DiagnosticRow, FlowDiagnostics, DIAGNOSTIC_NAMES};
pub use sampler::{field_spectra_from_density, FieldSample, FieldSampler, SpatialInterp};

type V2 = Vector2<f64>;
type M2 = Matrix2<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowMethod {
    /// Fixed-point sweeps over the whole `τ` ladder.
    Picard,
    /// Backward marching; solves the same discrete equations in one pass.
    Marching,
}

#[derive(Debug, Clone, Copy)]
pub struct FlowConfig {
    pub tol: f64,
    pub max_iter: usize,
    /// Quadrature sub-intervals per field time step.
    pub substeps: usize,
    pub method: FlowMethod,
    pub jacobians: bool,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig { tol: 1e-12, max_iter: 100, substeps: 1, method: FlowMethod::Marching, jacobians: true }
    }
}

/// `Y`, `W` and their first derivatives in the sheared variables at one `(s, x', v)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowPoint {
    pub y: V2,
    pub w: V2,
    pub dxy: M2,
    pub dvy: M2,
    pub dxw: M2,
    pub dvw: M2,
}

impl Default for FlowPoint {
    fn default() -> Self {
        FlowPoint { y: V2::zeros(), w: V2::zeros(), dxy: M2::zeros(), dvy: M2::zeros(), dxw: M2::zeros(), dvw: M2::zeros() }
    }
}

/// One backward trace: values at every field node from `s` (index 0) to `t`.
#[derive(Debug, Clone)]
pub struct Trace {
    pub s: f64,
    pub t: f64,
    pub points: Vec<FlowPoint>,
    pub iterations: usize,
    pub residual: f64,
}

impl Trace {
    /// Values at the field node closest to time `tau`.
    pub fn at(&self, tau: f64, dt: f64) -> &FlowPoint {
        let k = ((tau - self.s) / dt).round().clamp(0.0, (self.points.len() - 1) as f64) as usize;
        &self.points[k]
    }

    pub fn start(&self) -> &FlowPoint {
        &self.points[0]
    }
}

fn node_count(sampler: &FieldSampler, s: f64, t: f64, substeps: usize) -> Result<usize> {
    let h = sampler.times.dt() / substeps as f64;
    let q = (t - s) / h;
    if !(q >= -1e-9) || (q - q.round()).abs() > 1e-6 {
        return Err(Error::InvalidArgument(format!("times s = {s}, t = {t} are not on the quadrature lattice (h = {h})")));
    }
    Ok(q.round() as usize)
}

fn grad_matrix(g: [[f64; 2]; 2]) -> M2 {
    M2::new(g[0][0], g[0][1], g[1][0], g[1][1])
}

struct Sums {
    b: V2,
    a: V2,
    px: M2,
    pxt: M2,
    pv: M2,
    pvt: M2,
}

impl Sums {
    fn zero() -> Self {
        Sums { b: V2::zeros(), a: V2::zeros(), px: M2::zeros(), pxt: M2::zeros(), pv: M2::zeros(), pvt: M2::zeros() }
    }

    fn add(&mut self, weight: f64, tau: f64, e: V2, mx: M2, mv: M2) {
        self.b += weight * e;
        self.a += weight * tau * e;
        self.px += weight * mx;
        self.pxt += weight * tau * mx;
        self.pv += weight * mv;
        self.pvt += weight * tau * mv;
    }
}

/// Traces one sheared phase point `(x', v)` from `t` back to `s`.
pub fn trace(sampler: &FieldSampler, s: f64, t: f64, xs: [f64; 2], v: [f64; 2], cfg: &FlowConfig) -> Result<Trace> {
    let sub = cfg.substeps.max(1);
    let q = node_count(sampler, s, t, sub)?;
    let h = sampler.times.dt() / sub as f64;
    let (fine, iterations, residual) = match cfg.method {
        FlowMethod::Marching => (march(sampler, s, h, q, xs, v, cfg.jacobians), 1, 0.0),
        FlowMethod::Picard => picard(sampler, s, h, q, xs, v, cfg)?,
    };
    let points = fine.into_iter().step_by(sub).collect();
    Ok(Trace { s, t, points, iterations, residual })
}

fn sample_at(sampler: &FieldSampler, tau: f64, pos: V2, jac: bool) -> (V2, M2) {
    if jac {
        let smp = sampler.sample(tau, [pos[0], pos[1]]);
        (V2::new(smp.e[0], smp.e[1]), grad_matrix(smp.grad))
    } else {
        let e = sampler.field(tau, [pos[0], pos[1]]);
        (V2::new(e[0], e[1]), M2::zeros())
    }
}

fn march(sampler: &FieldSampler, s: f64, h: f64, q: usize, xs: [f64; 2], v: [f64; 2], jac: bool) -> Vec<FlowPoint> {
    let xs = V2::new(xs[0], xs[1]);
    let v = V2::new(v[0], v[1]);
    let id = M2::identity();
    let mut out = vec![FlowPoint::default(); q + 1];
    let mut sums = Sums::zero();
    for k in (0..=q).rev() {
        let tau = s + k as f64 * h;
        let mut p = FlowPoint::default();
        if k < q {
            p.y = h * (sums.a - tau * sums.b);
            if jac {
                p.dxy = h * (sums.pxt - tau * sums.px);
                p.dvy = h * (sums.pvt - tau * sums.pv);
            }
        }
        let (e, m) = sample_at(sampler, tau, xs + tau * v + p.y, jac);
        let mx = m * (id + p.dxy);
        let mv = m * (tau * id + p.dvy);
        if k < q {
            p.w = -h * (0.5 * e + sums.b);
            if jac {
                p.dxw = -h * (0.5 * mx + sums.px);
                p.dvw = -h * (0.5 * mv + sums.pv);
            }
        }
        sums.add(if k == q { 0.5 } else { 1.0 }, tau, e, mx, mv);
        out[k] = p;
    }
    out
}

/// Value-only backward march from `t` to `s` on the field lattice, calling
/// `visit(k, τ_k, Y_k, W_k, E(τ_k, X_k))` for `k = q, q-1, …, 0`. No
/// allocation; used by the density operators.
pub fn march_with(
    sampler: &FieldSampler,
    s: f64,
    t: f64,
    xs: [f64; 2],
    v: [f64; 2],
    mut visit: impl FnMut(usize, f64, [f64; 2], [f64; 2], [f64; 2]),
) -> Result<()> {
    let q = node_count(sampler, s, t, 1)?;
    let h = sampler.times.dt();
    // index of `s` on the field lattice, when it is a node
    let m0 = ((s - sampler.times.start) / h).round();
    let on_nodes = sampler.has_node_fast_path() && m0 >= 0.0 && (sampler.times.start + m0 * h - s).abs() < 1e-12;
    let (mut b, mut a) = ([0.0f64; 2], [0.0f64; 2]);
    for k in (0..=q).rev() {
        let tau = s + k as f64 * h;
        let y = if k < q { [h * (a[0] - tau * b[0]), h * (a[1] - tau * b[1])] } else { [0.0; 2] };
        let pos = [xs[0] + tau * v[0] + y[0], xs[1] + tau * v[1] + y[1]];
        let e = if on_nodes { sampler.field_at_node(m0 as usize + k, pos) } else { sampler.field(tau, pos) };
        let w = if k < q { [-h * (0.5 * e[0] + b[0]), -h * (0.5 * e[1] + b[1])] } else { [0.0; 2] };
        visit(k, tau, y, w, e);
        let wt = if k == q { 0.5 } else { 1.0 };
        for c in 0..2 {
            b[c] += wt * e[c];
            a[c] += wt * tau * e[c];
        }
    }
    Ok(())
}

/// One sweep: new `(Y, W, ∇Y, ∇W)` from the current iterate.
fn sweep(sampler: &FieldSampler, s: f64, h: f64, cur: &[FlowPoint], xs: V2, v: V2, jac: bool) -> Vec<FlowPoint> {
    let q = cur.len() - 1;
    let id = M2::identity();
    let samples: Vec<(V2, M2, M2)> = (0..=q)
        .map(|k| {
            let tau = s + k as f64 * h;
            let (e, m) = sample_at(sampler, tau, xs + tau * v + cur[k].y, jac);
            (e, m * (id + cur[k].dxy), m * (tau * id + cur[k].dvy))
        })
        .collect();
    let mut out = vec![FlowPoint::default(); q + 1];
    let mut sums = Sums::zero();
    for k in (0..=q).rev() {
        let tau = s + k as f64 * h;
        let (e, mx, mv) = samples[k];
        if k < q {
            let p = &mut out[k];
            p.y = h * (sums.a - tau * sums.b);
            p.w = -h * (0.5 * e + sums.b);
            if jac {
                p.dxy = h * (sums.pxt - tau * sums.px);
                p.dvy = h * (sums.pvt - tau * sums.pv);
                p.dxw = -h * (0.5 * mx + sums.px);
                p.dvw = -h * (0.5 * mv + sums.pv);
            }
        }
        sums.add(if k == q { 0.5 } else { 1.0 }, tau, e, mx, mv);
    }
    out
}

fn update_size(a: &[FlowPoint], b: &[FlowPoint]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (p, r)| {
        m.max((p.y - r.y).amax()).max((p.w - r.w).amax()).max((p.dxy - r.dxy).amax()).max((p.dvy - r.dvy).amax())
    })
}

fn picard(
    sampler: &FieldSampler,
    s: f64,
    h: f64,
    q: usize,
    xs: [f64; 2],
    v: [f64; 2],
    cfg: &FlowConfig,
) -> Result<(Vec<FlowPoint>, usize, f64)> {
    let xs = V2::new(xs[0], xs[1]);
    let v = V2::new(v[0], v[1]);
    let mut cur = vec![FlowPoint::default(); q + 1];
    let mut last = f64::INFINITY;
    for it in 1..=cfg.max_iter {
        let next = sweep(sampler, s, h, &cur, xs, v, cfg.jacobians);
        last = update_size(&next, &cur);
        cur = next;
        if !last.is_finite() {
            break;
        }
        if last < cfg.tol {
            let check = sweep(sampler, s, h, &cur, xs, v, cfg.jacobians);
            let residual = update_size(&check, &cur);
            return Ok((cur, it, residual));
        }
    }
    Err(Error::PicardDivergence { iterations: cfg.max_iter, last_update: last })
}

/// Backward position and velocity `(X_{s,t}, V_{s,t})(x, v)` in unsheared variables.
pub fn characteristic(sampler: &FieldSampler, s: f64, t: f64, x: [f64; 2], v: [f64; 2], cfg: &FlowConfig) -> Result<([f64; 2], [f64; 2], FlowPoint)> {
    let xs = [x[0] - t * v[0], x[1] - t * v[1]];
    let tr = trace(sampler, s, t, xs, v, cfg)?;
    let p = *tr.start();
    Ok((
        [x[0] - (t - s) * v[0] + p.y[0], x[1] - (t - s) * v[1] + p.y[1]],
        [v[0] + p.w[0], v[1] + p.w[1]],
        p,
    ))
}

/// Flow maps on a set of sheared phase points, recorded at every field node in `[s, t]`.
#[derive(Debug, Clone)]
pub struct FlowMaps {
    pub s: f64,
    pub t: f64,
    /// `(x', v)` sample points.
    pub points: Vec<([f64; 2], [f64; 2])>,
    pub traces: Vec<Trace>,
}

impl FlowMaps {
    pub fn max_residual(&self) -> f64 {
        self.traces.iter().fold(0.0, |m, t| m.max(t.residual))
    }

    pub fn max_iterations(&self) -> usize {
        self.traces.iter().map(|t| t.iterations).max().unwrap_or(0)
    }
}

/// `Y_{s,t}`, `W_{s,t}` (with Jacobians) at every sample point.
pub fn compute_flow(
    sampler: &FieldSampler,
    s: f64,
    t: f64,
    points: &[([f64; 2], [f64; 2])],
    cfg: &FlowConfig,
) -> Result<FlowMaps> {
    let traces = points.par_iter().map(|&(xs, v)| trace(sampler, s, t, xs, v, cfg)).collect::<Result<Vec<_>>>()?;
    Ok(FlowMaps { s, t, points: points.to_vec(), traces })
}

/// Straightened velocities at unsheared points `(x, v)`.
#[derive(Debug, Clone)]
pub struct InverseMap {
    pub psi: Vec<[f64; 2]>,
    pub max_defect: f64,
    pub max_newton_steps: usize,
}

/// Solves `X_{s,t}(x, Ψ) = x - (t-s)v` by Newton from `Ψ = v`.
pub fn invert_flow(
    sampler: &FieldSampler,
    s: f64,
    t: f64,
    points: &[([f64; 2], [f64; 2])],
    cfg: &FlowConfig,
    tol: f64,
) -> Result<InverseMap> {
    let cfg = FlowConfig { jacobians: true, ..*cfg };
    let results = points
        .par_iter()
        .map(|&(x, v)| invert_point(sampler, s, t, x, v, &cfg, tol))
        .collect::<Result<Vec<_>>>()?;
    let max_defect = results.iter().fold(0.0, |m: f64, r| m.max(r.1));
    let max_newton_steps = results.iter().map(|r| r.2).max().unwrap_or(0);
    Ok(InverseMap { psi: results.into_iter().map(|r| r.0).collect(), max_defect, max_newton_steps })
}

const NEWTON_MAX: usize = 50;

fn invert_point(
    sampler: &FieldSampler,
    s: f64,
    t: f64,
    x: [f64; 2],
    v: [f64; 2],
    cfg: &FlowConfig,
    tol: f64,
) -> Result<([f64; 2], f64, usize)> {
    let lag = t - s;
    let v = V2::new(v[0], v[1]);
    let mut psi = v;
    let mut defect = f64::INFINITY;
    for it in 0..NEWTON_MAX {
        let xs = [x[0] - t * psi[0], x[1] - t * psi[1]];
        let p = *trace(sampler, s, t, xs, [psi[0], psi[1]], cfg)?.start();
        let f = lag * (psi - v) - p.y;
        defect = f.norm();
        if defect < tol {
            return Ok(([psi[0], psi[1]], defect, it));
        }
        let jac = lag * M2::identity() + t * p.dxy - p.dvy;
        let step = jac
            .try_inverse()
            .ok_or(Error::InverseMapFailure { defect, iterations: it })?
            * f;
        psi -= step;
    }
    Err(Error::InverseMapFailure { defect, iterations: NEWTON_MAX })
}

/// Determinant of the `(x, v)`-Jacobian of `(X_{s,t}, V_{s,t})` assembled from
/// sheared-frame derivatives.
pub fn liouville_determinant(p: &FlowPoint, s: f64, t: f64) -> f64 {
    let id = M2::identity();
    let xx = id + p.dxy;
    let xv = -(t - s) * id - t * p.dxy + p.dvy;
    let vx = p.dxw;
    let vv = id - t * p.dxw + p.dvw;
    let mut m = nalgebra::Matrix4::<f64>::zeros();
    m.fixed_view_mut::<2, 2>(0, 0).copy_from(&xx);
    m.fixed_view_mut::<2, 2>(0, 2).copy_from(&xv);
    m.fixed_view_mut::<2, 2>(2, 0).copy_from(&vx);
    m.fixed_view_mut::<2, 2>(2, 2).copy_from(&vv);
    m.determinant()
}

#[cfg(test)]
mod tests;
