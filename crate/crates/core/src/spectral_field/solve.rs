use num_complex::Complex64;

use super::{NonlinearityA, ScalarField2D, VectorField2D};
use crate::error::{Error, Result};

/// `(-Δ + 1)^{-1}` as a Fourier multiplier.
pub fn helmholtz_invert(rho: &ScalarField2D) -> ScalarField2D {
    rho.apply_multiplier(|xi| Complex64::new(1.0 / (1.0 + xi[0] * xi[0] + xi[1] * xi[1]), 0.0))
}

/// `E = -∇u` by spectral differentiation.
pub fn electric_field(u: &ScalarField2D) -> VectorField2D {
    let g = u.gradient();
    VectorField2D { components: [g.components[0].scale(-1.0), g.components[1].scale(-1.0)] }
}

/// Pointwise `A(u)`; only defined on the window `‖u‖_∞ ≤ 1`.
pub fn eval_a(a: &NonlinearityA, u: &ScalarField2D) -> Result<ScalarField2D> {
    let sup = u.sup_norm();
    if sup > 1.0 {
        return Err(Error::AssumptionWindowExceeded(sup));
    }
    if a.is_zero() {
        return Ok(ScalarField2D::zeros(u.grid));
    }
    Ok(u.map(|r| a.eval(r)))
}

#[derive(Debug, Clone, Copy)]
pub struct SemilinearConfig {
    pub tol: f64,
    pub max_iter: usize,
    /// Smallness gate on `‖ρ‖_{L¹∩L∞}`.
    pub gate: f64,
    pub dealias: bool,
}

impl Default for SemilinearConfig {
    fn default() -> Self {
        SemilinearConfig { tol: 1e-10, max_iter: 64, gate: 0.1, dealias: true }
    }
}

#[derive(Debug, Clone)]
pub struct SemilinearSolution {
    pub u: ScalarField2D,
    pub iterations: usize,
    /// `‖-Δu + u - ρ - A(u)‖_∞`, evaluated spectrally.
    pub residual: f64,
}

pub(crate) fn nonlinear_term(a: &NonlinearityA, u: &ScalarField2D, dealias: bool) -> Result<ScalarField2D> {
    let au = eval_a(a, u)?;
    Ok(if dealias { au.dealiased() } else { au })
}

/// Picard iteration for `-Δu + u = ρ + A(u)` started from the linear solve.
pub fn solve_semilinear(rho: &ScalarField2D, a: &NonlinearityA, cfg: &SemilinearConfig) -> Result<SemilinearSolution> {
    let size = rho.l1_linf_norm();
    if size > cfg.gate {
        return Err(Error::SmallnessViolation { norm: size, gate: cfg.gate });
    }
    let mut u = helmholtz_invert(rho);
    let mut last = f64::INFINITY;
    for it in 1..=cfg.max_iter {
        let next = if a.is_zero() {
            u.clone()
        } else {
            helmholtz_invert(&rho.add(&nonlinear_term(a, &u, cfg.dealias)?))
        };
        last = next.sub(&u).sup_norm();
        u = next;
        if last < cfg.tol {
            let residual = residual(rho, a, &u, cfg.dealias)?;
            return Ok(SemilinearSolution { u, iterations: it, residual });
        }
    }
    Err(Error::PicardDivergence { iterations: cfg.max_iter, last_update: last })
}

fn residual(rho: &ScalarField2D, a: &NonlinearityA, u: &ScalarField2D, dealias: bool) -> Result<f64> {
    let lhs = u.apply_multiplier(|xi| Complex64::new(1.0 + xi[0] * xi[0] + xi[1] * xi[1], 0.0));
    let rhs = if a.is_zero() { rho.clone() } else { rho.add(&nonlinear_term(a, u, dealias)?) };
    Ok(lhs.sub(&rhs).sup_norm())
}
