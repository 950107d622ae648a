//! Periodic spatial grids, spectral multipliers, the screened semilinear
//! field solve `-Δu + u = ρ + A(u)` and the electric field `E = -∇u`.

mod fft;
mod nonlinearity;
pub(crate) mod solve;

use std::sync::{Arc, OnceLock};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub use fft::Fft2;
pub use nonlinearity::{NonlinearityA, NonlinearityKind};
pub use solve::{
    electric_field, eval_a, helmholtz_invert, solve_semilinear, SemilinearConfig, SemilinearSolution,
};

/// Square periodic box `[-L, L)²` with `N` points per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicGrid {
    pub half_length: f64,
    pub n: usize,
}

impl PeriodicGrid {
    pub fn new(half_length: f64, n: usize) -> Result<Self> {
        if !(half_length > 0.0) || !half_length.is_finite() {
            return Err(Error::InvalidGrid(format!("grid.L must be positive, got {half_length}")));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!("grid.N must be a power of two >= 8, got {n}")));
        }
        Ok(PeriodicGrid { half_length, n })
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_length / self.n as f64
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate of node `i` along one axis.
    pub fn coord(&self, i: usize) -> f64 {
        -self.half_length + i as f64 * self.dx()
    }

    pub fn point(&self, idx: usize) -> [f64; 2] {
        [self.coord(idx / self.n), self.coord(idx % self.n)]
    }

    /// Signed integer wavenumber of FFT bin `i`.
    pub fn wavenumber(&self, i: usize) -> i64 {
        if i < self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// Dual frequency `ξ = πk/L` of FFT bin `i`.
    pub fn frequency(&self, i: usize) -> f64 {
        std::f64::consts::PI * self.wavenumber(i) as f64 / self.half_length
    }

    pub fn xi(&self, idx: usize) -> [f64; 2] {
        [self.frequency(idx / self.n), self.frequency(idx % self.n)]
    }

    /// DFT coefficient of bin `idx` for a function whose continuous Fourier
    /// transform at `ξ(idx)` is `fhat` (nodes start at `-L`).
    pub fn dft_from_continuous(&self, idx: usize, fhat: Complex64) -> Complex64 {
        let parity = (self.wavenumber(idx / self.n) + self.wavenumber(idx % self.n)).rem_euclid(2);
        let dx = self.dx();
        let sign = if parity == 0 { 1.0 } else { -1.0 };
        fhat * (sign / (dx * dx))
    }

    /// Frequency spacing `Δξ = π/L`.
    pub fn frequency_spacing(&self) -> f64 {
        std::f64::consts::PI / self.half_length
    }

    /// Whether `Δξ ≤ π/(v_max·T)`, i.e. `L ≥ v_max·T`.
    pub fn satisfies_dispersive_window(&self, v_max: f64, horizon: f64) -> bool {
        self.frequency_spacing() <= std::f64::consts::PI / (v_max * horizon) * (1.0 + 1e-12)
    }

    /// True for bins kept by the 2/3 rule.
    pub fn dealias_keep(&self, idx: usize) -> bool {
        let cut = (self.n / 3) as i64;
        self.wavenumber(idx / self.n).abs() <= cut && self.wavenumber(idx % self.n).abs() <= cut
    }

    /// Whether bin `i` is the unpaired Nyquist bin along its axis.
    pub fn is_nyquist(&self, i: usize) -> bool {
        i == self.n / 2
    }

    /// Wrap a coordinate into `[-L, L)`.
    pub fn wrap(&self, x: f64) -> f64 {
        let p = 2.0 * self.half_length;
        let mut y = (x + self.half_length).rem_euclid(p) - self.half_length;
        if y >= self.half_length {
            y -= p;
        }
        y
    }

    pub(crate) fn fft(&self) -> Arc<Fft2> {
        Fft2::cached(self.n)
    }

    pub fn check_same(&self, other: &PeriodicGrid) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!("{self:?} vs {other:?}")));
        }
        Ok(())
    }
}

/// Real scalar samples on a periodic grid, row-major (`x1` slow, `x2` fast).
#[derive(Debug, Clone)]
pub struct ScalarField2D {
    pub grid: PeriodicGrid,
    pub values: Vec<f64>,
    spectrum: OnceLock<Vec<Complex64>>,
}

impl ScalarField2D {
    pub fn new(grid: PeriodicGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!("{} samples for a {}² grid", values.len(), grid.n)));
        }
        Ok(ScalarField2D { grid, values, spectrum: OnceLock::new() })
    }

    pub fn zeros(grid: PeriodicGrid) -> Self {
        ScalarField2D { grid, values: vec![0.0; grid.len()], spectrum: OnceLock::new() }
    }

    pub fn from_fn(grid: PeriodicGrid, f: impl Fn([f64; 2]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        ScalarField2D { grid, values, spectrum: OnceLock::new() }
    }

    /// Real part of the inverse transform of `spectrum`.
    pub fn from_spectrum(grid: PeriodicGrid, spectrum: Vec<Complex64>) -> Self {
        let values = grid.fft().inverse_real(&spectrum);
        let cache = OnceLock::new();
        let _ = cache.set(spectrum);
        ScalarField2D { grid, values, spectrum: cache }
    }

    /// Discrete Fourier coefficients (unnormalized forward DFT), cached.
    pub fn spectrum(&self) -> &[Complex64] {
        self.spectrum.get_or_init(|| self.grid.fft().forward_real(&self.values))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ScalarField2D { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect(), spectrum: OnceLock::new() }
    }

    pub fn zip_map(&self, other: &ScalarField2D, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        ScalarField2D { grid: self.grid, values, spectrum: OnceLock::new() }
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }

    pub fn add(&self, other: &ScalarField2D) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ScalarField2D) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    /// Applies the Fourier multiplier `m(ξ)`.
    pub fn apply_multiplier(&self, m: impl Fn([f64; 2]) -> Complex64) -> Self {
        let spec: Vec<Complex64> =
            self.spectrum().iter().enumerate().map(|(i, &c)| c * m(self.grid.xi(i))).collect();
        ScalarField2D::from_spectrum(self.grid, spec)
    }

    /// 2/3-rule truncation.
    pub fn dealiased(&self) -> Self {
        let spec: Vec<Complex64> = self
            .spectrum()
            .iter()
            .enumerate()
            .map(|(i, &c)| if self.grid.dealias_keep(i) { c } else { Complex64::new(0.0, 0.0) })
            .collect();
        ScalarField2D::from_spectrum(self.grid, spec)
    }

    /// Spectral partial derivative along `axis` (Nyquist bin dropped).
    pub fn derivative(&self, axis: usize) -> Self {
        let g = self.grid;
        let spec: Vec<Complex64> = self
            .spectrum()
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let bin = if axis == 0 { i / g.n } else { i % g.n };
                if g.is_nyquist(bin) {
                    Complex64::new(0.0, 0.0)
                } else {
                    c * Complex64::new(0.0, g.frequency(bin))
                }
            })
            .collect();
        ScalarField2D::from_spectrum(g, spec)
    }

    pub fn gradient(&self) -> VectorField2D {
        VectorField2D { components: [self.derivative(0), self.derivative(1)] }
    }

    pub fn laplacian(&self) -> Self {
        self.apply_multiplier(|xi| Complex64::new(-(xi[0] * xi[0] + xi[1] * xi[1]), 0.0))
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn l1_norm(&self) -> f64 {
        let dx = self.grid.dx();
        self.values.iter().map(|v| v.abs()).sum::<f64>() * dx * dx
    }

    pub fn integral(&self) -> f64 {
        let dx = self.grid.dx();
        self.values.iter().sum::<f64>() * dx * dx
    }

    /// `‖·‖_{L¹ ∩ L∞} = max(‖·‖_{L¹}, ‖·‖_{L∞})`.
    pub fn l1_linf_norm(&self) -> f64 {
        self.l1_norm().max(self.sup_norm())
    }

    /// Trigonometric interpolant at an arbitrary point (exact on band-limited
    /// fields; Nyquist bins split symmetrically).
    pub fn interpolate(&self, x: [f64; 2]) -> f64 {
        trig_eval(self.grid, self.spectrum(), x, [0, 0])
    }
}

/// Evaluates the trigonometric interpolant (or one of its derivatives, of
/// order `deriv` per axis) of a spectrum at `x`.
pub(crate) fn trig_eval(grid: PeriodicGrid, spec: &[Complex64], x: [f64; 2], deriv: [u32; 2]) -> f64 {
    let n = grid.n;
    let l = grid.half_length;
    let shift = [x[0] + l, x[1] + l];
    let axis_factors = |axis: usize| -> Vec<Complex64> {
        (0..n)
            .map(|i| {
                let k = grid.wavenumber(i) as f64;
                let xi = std::f64::consts::PI * k / l;
                let d = Complex64::new(0.0, xi).powu(deriv[axis]);
                if grid.is_nyquist(i) {
                    // split the Nyquist bin between ±N/2 to keep the interpolant real
                    let c = (xi * shift[axis]).cos();
                    let s = (xi * shift[axis]).sin();
                    match deriv[axis] {
                        0 => Complex64::new(c, 0.0),
                        p => {
                            let dd = xi.powi(p as i32);
                            match p % 4 {
                                1 => Complex64::new(-dd * s, 0.0),
                                2 => Complex64::new(-dd * c, 0.0),
                                3 => Complex64::new(dd * s, 0.0),
                                _ => Complex64::new(dd * c, 0.0),
                            }
                        }
                    }
                } else {
                    d * Complex64::from_polar(1.0, xi * shift[axis])
                }
            })
            .collect()
    };
    let f0 = axis_factors(0);
    let f1 = axis_factors(1);
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        let mut row = Complex64::new(0.0, 0.0);
        for j in 0..n {
            row += spec[i * n + j] * f1[j];
        }
        acc += row * f0[i];
    }
    acc.re / (n * n) as f64
}

/// Two-component field on a periodic grid.
#[derive(Debug, Clone)]
pub struct VectorField2D {
    pub components: [ScalarField2D; 2],
}

impl VectorField2D {
    pub fn grid(&self) -> PeriodicGrid {
        self.components[0].grid
    }

    pub fn divergence(&self) -> ScalarField2D {
        self.components[0].derivative(0).add(&self.components[1].derivative(1))
    }

    /// Pointwise Euclidean magnitude.
    pub fn magnitude(&self) -> ScalarField2D {
        self.components[0].zip_map(&self.components[1], |a, b| a.hypot(b))
    }

    pub fn sup_norm(&self) -> f64 {
        self.magnitude().sup_norm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn grid_validation() {
        assert!(PeriodicGrid::new(1.0, 4).is_err());
        assert!(PeriodicGrid::new(1.0, 12).is_err());
        assert!(PeriodicGrid::new(-1.0, 16).is_err());
        let g = PeriodicGrid::new(PI, 16).unwrap();
        assert_eq!(g.frequency(1), 1.0);
        assert_eq!(g.frequency(15), -1.0);
        assert_eq!(g.wavenumber(8), -8);
    }

    #[test]
    fn spectrum_round_trip() {
        let g = PeriodicGrid::new(3.0, 32).unwrap();
        let f = ScalarField2D::from_fn(g, |x| (-(x[0] * x[0] + 2.0 * x[1] * x[1])).exp() + 0.1 * x[0].sin());
        let back = ScalarField2D::from_spectrum(g, f.spectrum().to_vec());
        let scale = f.sup_norm();
        for (a, b) in f.values.iter().zip(&back.values) {
            assert!((a - b).abs() < 1e-10 * scale);
        }
    }

    #[test]
    fn trig_interpolation_reproduces_nodes_and_derivatives() {
        let g = PeriodicGrid::new(PI, 16).unwrap();
        let f = ScalarField2D::from_fn(g, |x| (2.0 * x[0]).cos() * x[1].sin() + 0.3 * (3.0 * x[1]).cos());
        for idx in [0, 17, 100, 255] {
            assert!((f.interpolate(g.point(idx)) - f.values[idx]).abs() < 1e-12);
        }
        let p: [f64; 2] = [0.37, -1.2];
        let exact = -2.0 * (2.0 * p[0]).sin() * p[1].sin();
        assert!((trig_eval(g, f.spectrum(), p, [1, 0]) - exact).abs() < 1e-11);
    }
}
