use std::ops::RangeInclusive;
use std::sync::Mutex;

use rayon::prelude::*;

use super::InitialData;
use crate::characteristics::{march_with, FieldSampler};
use crate::equilibria::EquilibriumProfile;
use crate::error::{Error, Result};
use crate::spacetime::{SpaceTimeField, TimeGrid, VelocityGrid};
use crate::spectral_field::{PeriodicGrid, ScalarField2D};

/// Phase-space quadrature: the spatial grid and the velocity nodes in the
/// disk `|v| ≤ v_max`.
#[derive(Debug, Clone)]
pub struct PhaseQuadrature {
    pub x_grid: PeriodicGrid,
    pub v_grid: VelocityGrid,
    nodes: Vec<[f64; 2]>,
    ring: Vec<bool>,
}

impl PhaseQuadrature {
    pub fn new(x_grid: PeriodicGrid, v_grid: VelocityGrid) -> Self {
        let nodes = v_grid.disk_nodes();
        let edge = v_grid.v_max - 1.5 * v_grid.dv();
        let ring = nodes.iter().map(|v| v[0].hypot(v[1]) > edge).collect();
        PhaseQuadrature { x_grid, v_grid, nodes, ring }
    }

    pub fn velocity_nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }
}

/// Largest `f₀` share on the outer velocity ring tolerated before the
/// truncation is declared breached.
pub const RING_TOLERANCE: f64 = 1e-8;

/// `sup_v Σ_{j≤3} ⟨v⟩³|∇ʲη(v)|` by nested central differences on a sample
/// lattice of the velocity box.
pub fn eta_weight(eta: &(dyn Fn([f64; 2]) -> f64 + Sync), v_max: f64) -> f64 {
    let h = 1e-2;
    let m = 24;
    let d = |f: &dyn Fn([f64; 2]) -> f64, v: [f64; 2], a: usize| {
        let mut p = v;
        let mut q = v;
        p[a] += h;
        q[a] -= h;
        (f(p) - f(q)) / (2.0 * h)
    };
    let mut best = 0.0f64;
    for i in 0..=m {
        for j in 0..=m {
            let v = [-v_max + 2.0 * v_max * i as f64 / m as f64, -v_max + 2.0 * v_max * j as f64 / m as f64];
            let mut g1 = 0.0;
            let mut g2 = 0.0;
            let mut g3 = 0.0;
            for a in 0..2 {
                let da = |w: [f64; 2]| d(eta, w, a);
                g1 += da(v).powi(2);
                for b in 0..2 {
                    let dab = |w: [f64; 2]| d(&da, w, b);
                    g2 += dab(v).powi(2);
                    for c in 0..2 {
                        g3 += d(&dab, v, c).powi(2);
                    }
                }
            }
            let jv = (1.0 + v[0] * v[0] + v[1] * v[1]).powf(1.5);
            best = best.max(jv * (eta(v).abs() + g1.sqrt() + g2.sqrt() + g3.sqrt()));
        }
    }
    best
}

/// Per-node output of the fused march.
#[derive(Debug, Clone)]
pub struct NodeIntegrals {
    /// `∫ [f₀(X₀,V₀) − f₀(x − tv, v)] dv`.
    pub initial_correction: ScalarField2D,
    /// `𝓣_L − 𝓣_NL`.
    pub reaction: ScalarField2D,
}

/// What the fused march integrates besides the flow itself.
pub(crate) struct MarchSpec<'a> {
    pub f0: Option<&'a InitialData>,
    /// `F` of `𝓣[F, η]`; `None` reuses the flow's own field `E`.
    pub forcing: Option<&'a FieldSampler>,
    pub eta: Option<&'a (dyn Fn([f64; 2]) -> [f64; 2] + Sync)>,
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Marches every `(x, v)` of `quad` back from each node in `nodes` to 0
/// through the field of `flows`, accumulating the `𝓘` correction and the
/// `𝓣` difference. Both use the same velocity nodes, so with no field the
/// outputs vanish identically.
pub(crate) fn fused_march(flows: &FieldSampler, quad: &PhaseQuadrature, nodes: RangeInclusive<usize>, spec: &MarchSpec) -> Result<Vec<NodeIntegrals>> {
    let grid = quad.x_grid;
    let dt = flows.times.dt();
    let wv = quad.v_grid.weight();
    let failure: Mutex<Option<Error>> = Mutex::new(None);
    let etas: Vec<[f64; 2]> = match spec.eta {
        Some(eta) => quad.nodes.iter().map(|&v| eta(v)).collect(),
        None => vec![[0.0; 2]; quad.nodes.len()],
    };
    let mut out = Vec::new();
    for n in nodes {
        let t = flows.times.node(n);
        if n == 0 {
            out.push(NodeIntegrals { initial_correction: ScalarField2D::zeros(grid), reaction: ScalarField2D::zeros(grid) });
            continue;
        }
        let rows: Vec<(f64, f64, f64, f64)> = (0..grid.len())
            .into_par_iter()
            .map(|ix| {
                let x = grid.point(ix);
                let (mut di, mut r, mut ring, mut total) = (0.0, 0.0, 0.0, 0.0);
                for (iv, &v) in quad.nodes.iter().enumerate() {
                    let xs = [x[0] - t * v[0], x[1] - t * v[1]];
                    let eta_v = etas[iv];
                    let res = march_with(flows, 0.0, t, xs, v, |k, tau, y, w, e| {
                        let free_pos = [xs[0] + tau * v[0], xs[1] + tau * v[1]];
                        let pos = [free_pos[0] + y[0], free_pos[1] + y[1]];
                        let vel = [v[0] + w[0], v[1] + w[1]];
                        if let Some(eta) = spec.eta {
                            let wt = if k == 0 || k == n { 0.5 * dt } else { dt };
                            let (f_free, f_flow) = match spec.forcing {
                                Some(fs) => (fs.field(tau, free_pos), fs.field(tau, pos)),
                                None => (flows.field_at_node(k, free_pos), e),
                            };
                            r += wt * (dot(f_free, eta_v) - dot(f_flow, eta(vel)));
                        }
                        if k == 0 {
                            if let Some(f0) = spec.f0 {
                                let moved = f0.value_periodic(&grid, pos, vel);
                                di += moved - f0.value_periodic(&grid, free_pos, v);
                                total += moved.abs();
                                if quad.ring[iv] {
                                    ring += moved.abs();
                                }
                            }
                        }
                    });
                    if let Err(e) = res {
                        failure.lock().unwrap().get_or_insert(e);
                        break;
                    }
                }
                (di * wv, r * wv, ring, total)
            })
            .collect();
        if let Some(e) = failure.lock().unwrap().take() {
            return Err(e);
        }
        let (ring, total) = rows.iter().fold((0.0, 0.0), |acc, r| (acc.0 + r.2, acc.1 + r.3));
        if total > 0.0 && ring / total > RING_TOLERANCE {
            return Err(Error::VelocityTruncationBreach(ring / total));
        }
        out.push(NodeIntegrals {
            initial_correction: ScalarField2D::new(grid, rows.iter().map(|r| r.0).collect())?,
            reaction: ScalarField2D::new(grid, rows.iter().map(|r| r.1).collect())?,
        });
    }
    Ok(out)
}

/// `𝓘_{f₀}(𝔤)(t_n) = ∫ f₀(X_{0,t}, V_{0,t}) dv` at node `n` of the flow grid.
///
/// The free-transport part `ρ̂(t, ξ) = f̂₀(ξ, tξ)` is taken spectrally; only
/// the flow correction `f₀(X₀,V₀) − f₀(x − tv, v)` goes through the velocity
/// quadrature. A fixed velocity lattice aliases free streaming after
/// `t ≈ 2π/(|ξ|·dv)`; the split confines that error to the flow correction.
pub fn transported_initial(f0: &InitialData, flows: &FieldSampler, quad: &PhaseQuadrature, n: usize) -> Result<ScalarField2D> {
    let t = flows.times.node(n);
    let free = f0.free_density(quad.x_grid, t);
    if f0.is_zero() {
        return Ok(free);
    }
    let spec = MarchSpec { f0: Some(f0), forcing: None, eta: None };
    let corr = fused_march(flows, quad, n..=n, &spec)?.remove(0).initial_correction;
    Ok(free.add(&corr))
}

fn check_eta(eta: &(dyn Fn([f64; 2]) -> [f64; 2] + Sync), v_max: f64) -> Result<()> {
    for c in 0..2 {
        let w = eta_weight(&|v| eta(v)[c], v_max);
        if w > 1.0 {
            return Err(Error::EtaWeightViolation(w));
        }
    }
    Ok(())
}

/// `𝓣[F, η] = 𝓣_L − 𝓣_NL` with `F·η` summed over components, for nodes
/// `1..` of the flow grid (`𝓣` vanishes at `t = 0`).
pub fn t_operator(
    forcing: &FieldSampler,
    eta: &(dyn Fn([f64; 2]) -> [f64; 2] + Sync),
    flows: &FieldSampler,
    quad: &PhaseQuadrature,
) -> Result<SpaceTimeField> {
    check_eta(eta, quad.v_grid.v_max)?;
    forcing.grid.check_same(&flows.grid)?;
    let spec = MarchSpec { f0: None, forcing: Some(forcing), eta: Some(eta) };
    let n = flows.times.steps;
    let slices = fused_march(flows, quad, 0..=n, &spec)?.into_iter().map(|r| r.reaction).collect();
    SpaceTimeField::new(quad.x_grid, flows.times, slices)
}

/// `𝓡(𝔤) = Σᵢ 𝓣[Eᵢ, ∂ᵥᵢμ]` on every node of the flow grid. Returns the field
/// and the weight factor by which `∇μ` had to be divided to pass the
/// `η` gate (the output already carries it back).
pub fn reaction(flows: &FieldSampler, profile: &EquilibriumProfile, quad: &PhaseQuadrature) -> Result<(SpaceTimeField, f64)> {
    let grad = |v: [f64; 2]| profile.grad_mu(v).unwrap_or([0.0, 0.0]);
    let factor = (0..2)
        .map(|c| eta_weight(&|v| grad(v)[c], quad.v_grid.v_max))
        .fold(1.0f64, f64::max);
    let spec = MarchSpec { f0: None, forcing: None, eta: Some(&grad) };
    let n = flows.times.steps;
    let slices = fused_march(flows, quad, 0..=n, &spec)?.into_iter().map(|r| r.reaction).collect();
    Ok((SpaceTimeField::new(quad.x_grid, flows.times, slices)?, factor))
}

/// Flow field sampler for a `𝔤` trajectory.
pub fn flows_from_g(g: &SpaceTimeField) -> FieldSampler {
    FieldSampler::from_density(g, crate::characteristics::SpatialInterp::CubicSpline)
}

/// Time grid of the first `m + 1` nodes, or the full one.
pub(crate) fn prefix_grid(times: &TimeGrid, m: usize) -> Result<TimeGrid> {
    if m == times.steps {
        Ok(*times)
    } else {
        times.truncated(m)
    }
}
