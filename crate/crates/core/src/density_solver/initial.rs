use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::norms::{triple_norm_initial, NormReport, PhaseFunction, ShiftSet};
use crate::spacetime::{SpaceTimeField, TimeGrid, VelocityGrid};
use crate::spectral_field::{PeriodicGrid, ScalarField2D};

/// Gaussian perturbation
/// `f₀(x, v) = ε·exp(−|x−c|²/2σₓ²)·exp(−|v|²/2σᵥ²)/(2πσᵥ²)`,
/// so that `∫ f₀ dv = ε·exp(−|x−c|²/2σₓ²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialData {
    pub epsilon: f64,
    pub sigma_x: f64,
    pub sigma_v: f64,
    pub center: [f64; 2],
}

impl InitialData {
    pub fn gaussian(epsilon: f64, sigma_x: f64, sigma_v: f64) -> Result<Self> {
        if !(sigma_x > 0.0 && sigma_v > 0.0) || !epsilon.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "Gaussian data needs finite ε and positive widths (ε = {epsilon}, σx = {sigma_x}, σv = {sigma_v})"
            )));
        }
        Ok(InitialData { epsilon, sigma_x, sigma_v, center: [0.0, 0.0] })
    }

    pub fn zero() -> Self {
        InitialData { epsilon: 0.0, sigma_x: 1.0, sigma_v: 1.0, center: [0.0, 0.0] }
    }

    pub fn with_center(mut self, c: [f64; 2]) -> Self {
        self.center = c;
        self
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        self.epsilon *= factor;
        self
    }

    pub fn is_zero(&self) -> bool {
        self.epsilon == 0.0
    }

    /// `∫∫ f₀ dx dv` on the whole plane.
    pub fn mass(&self) -> f64 {
        self.epsilon * 2.0 * PI * self.sigma_x * self.sigma_x
    }

    fn parts(&self, dx: [f64; 2], v: [f64; 2]) -> (f64, f64) {
        let sx2 = self.sigma_x * self.sigma_x;
        let sv2 = self.sigma_v * self.sigma_v;
        let gx = (-(dx[0] * dx[0] + dx[1] * dx[1]) / (2.0 * sx2)).exp();
        let gv = (-(v[0] * v[0] + v[1] * v[1]) / (2.0 * sv2)).exp() / (2.0 * PI * sv2);
        (gx, gv)
    }

    /// `f₀` extended periodically from the box of `grid` (nearest image).
    pub fn value_periodic(&self, grid: &PeriodicGrid, x: [f64; 2], v: [f64; 2]) -> f64 {
        let dx = [grid.wrap(x[0] - self.center[0]), grid.wrap(x[1] - self.center[1])];
        let (gx, gv) = self.parts(dx, v);
        self.epsilon * gx * gv
    }

    /// `f̂₀(ξ, η) = ∫∫ f₀ e^{−i(x·ξ + v·η)} dx dv`.
    pub fn fourier(&self, xi: [f64; 2], eta: [f64; 2]) -> Complex64 {
        let sx2 = self.sigma_x * self.sigma_x;
        let sv2 = self.sigma_v * self.sigma_v;
        let amp = self.epsilon
            * 2.0
            * PI
            * sx2
            * (-0.5 * sx2 * (xi[0] * xi[0] + xi[1] * xi[1])).exp()
            * (-0.5 * sv2 * (eta[0] * eta[0] + eta[1] * eta[1])).exp();
        Complex64::from_polar(amp, -(xi[0] * self.center[0] + xi[1] * self.center[1]))
    }

    /// Free-transport density `ρ̂(t, ξ) = f̂₀(ξ, tξ)` on the grid, summed over
    /// periodic images.
    pub fn free_density(&self, grid: PeriodicGrid, t: f64) -> ScalarField2D {
        let spec = (0..grid.len())
            .map(|idx| {
                let xi = grid.xi(idx);
                grid.dft_from_continuous(idx, self.fourier(xi, [t * xi[0], t * xi[1]]))
            })
            .collect();
        ScalarField2D::from_spectrum(grid, spec)
    }

    pub fn free_trajectory(&self, grid: PeriodicGrid, times: TimeGrid) -> SpaceTimeField {
        let slices = times.nodes().map(|t| self.free_density(grid, t)).collect();
        SpaceTimeField::new(grid, times, slices).expect("consistent slices")
    }

    /// `|||f₀|||_{1+a}` on a truncated phase grid.
    pub fn triple_norm(&self, a: f64, x_grid: PeriodicGrid, v_grid: VelocityGrid, shifts: &ShiftSet) -> Result<NormReport> {
        triple_norm_initial(self, a, x_grid, v_grid, shifts)
    }
}

impl PhaseFunction for InitialData {
    fn value_grad(&self, x: [f64; 2], v: [f64; 2]) -> (f64, [f64; 4]) {
        let dx = [x[0] - self.center[0], x[1] - self.center[1]];
        let (gx, gv) = self.parts(dx, v);
        let h = self.epsilon * gx * gv;
        let sx2 = self.sigma_x * self.sigma_x;
        let sv2 = self.sigma_v * self.sigma_v;
        (h, [-dx[0] / sx2 * h, -dx[1] / sx2 * h, -v[0] / sv2 * h, -v[1] / sv2 * h])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_density_at_zero_is_velocity_integral() {
        let grid = PeriodicGrid::new(2.0 * PI, 32).unwrap();
        let f0 = InitialData::gaussian(1e-3, 1.0, 1.0).unwrap().with_center([0.3, -0.2]);
        let rho = f0.free_density(grid, 0.0);
        for idx in 0..grid.len() {
            let x = grid.point(idx);
            let expect = 1e-3 * (-((x[0] - 0.3).powi(2) + (x[1] + 0.2).powi(2)) / 2.0).exp();
            // periodic images differ from the single Gaussian by ~ε·e^{-L²/2}
            assert!((rho.values[idx] - expect).abs() < 1e-10, "{idx} {} {expect}", rho.values[idx]);
        }
    }

    #[test]
    fn free_density_matches_velocity_quadrature() {
        let grid = PeriodicGrid::new(2.0 * PI, 32).unwrap();
        let f0 = InitialData::gaussian(1.0, 1.0, 1.0).unwrap();
        let vg = VelocityGrid::new(64, 8.0).unwrap();
        let t = 0.4;
        let rho = f0.free_density(grid, t);
        for idx in [0, 100, 517, 1000] {
            let x = grid.point(idx);
            let q: f64 = vg
                .nodes()
                .iter()
                .map(|v| f0.value_periodic(&grid, [x[0] - t * v[0], x[1] - t * v[1]], *v))
                .sum::<f64>()
                * vg.weight();
            assert!((rho.values[idx] - q).abs() < 1e-8, "{} vs {q}", rho.values[idx]);
        }
    }

    #[test]
    fn gradient_matches_differences() {
        let f0 = InitialData::gaussian(0.5, 1.3, 0.8).unwrap().with_center([0.1, 0.2]);
        let (x, v) = ([0.4, -0.7], [0.9, 0.2]);
        let (_, g) = f0.value_grad(x, v);
        let h = 1e-6;
        for k in 0..4 {
            let mut xp = [x[0], x[1], v[0], v[1]];
            let mut xm = xp;
            xp[k] += h;
            xm[k] -= h;
            let fd = (f0.value([xp[0], xp[1]], [xp[2], xp[3]]) - f0.value([xm[0], xm[1]], [xm[2], xm[3]])) / (2.0 * h);
            assert!((fd - g[k]).abs() < 1e-8);
        }
    }
}
