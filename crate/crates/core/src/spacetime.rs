//! Time grids and fields sampled on `time grid × periodic grid`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral_field::{PeriodicGrid, ScalarField2D, VectorField2D};

/// Uniform nodes `t_m = t0 + m·dt`, `m = 0..=M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub start: f64,
    pub horizon: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        Self::with_start(0.0, horizon, steps)
    }

    pub fn with_start(start: f64, horizon: f64, steps: usize) -> Result<Self> {
        if steps < 2 || !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidArgument(format!("time grid needs T > 0 and M >= 2 (T = {horizon}, M = {steps})")));
        }
        Ok(TimeGrid { start, horizon, steps })
    }

    /// Grid of step `dt` covering `[0, T]`, `T` rounded to a whole number of steps.
    pub fn from_step(horizon: f64, dt: f64) -> Result<Self> {
        let steps = (horizon / dt).round().max(2.0) as usize;
        Self::new(steps as f64 * dt, steps)
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn node(&self, m: usize) -> f64 {
        self.start + m as f64 * self.dt()
    }

    pub fn end(&self) -> f64 {
        self.start + self.horizon
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |m| self.node(m))
    }

    /// Same step, first `m + 1` nodes.
    pub fn truncated(&self, m: usize) -> Result<Self> {
        Self::with_start(self.start, m as f64 * self.dt(), m)
    }
}

/// Uniform velocity nodes `v = -v_max + (i + 1/2)·dv` per axis, `dv = 2v_max/n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityGrid {
    pub n: usize,
    pub v_max: f64,
}

impl VelocityGrid {
    pub fn new(n: usize, v_max: f64) -> Result<Self> {
        if n < 2 || !(v_max > 0.0) {
            return Err(Error::InvalidGrid(format!("velocity grid needs n >= 2 and v_max > 0 (n = {n}, v_max = {v_max})")));
        }
        Ok(VelocityGrid { n, v_max })
    }

    pub fn dv(&self) -> f64 {
        2.0 * self.v_max / self.n as f64
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.v_max + (i as f64 + 0.5) * self.dv()
    }

    /// All nodes of the square, row-major.
    pub fn nodes(&self) -> Vec<[f64; 2]> {
        (0..self.n * self.n).map(|k| [self.coord(k / self.n), self.coord(k % self.n)]).collect()
    }

    /// Nodes inside the disk `|v| ≤ v_max`.
    pub fn disk_nodes(&self) -> Vec<[f64; 2]> {
        self.nodes().into_iter().filter(|v| v[0].hypot(v[1]) <= self.v_max).collect()
    }

    /// Area weight of one node.
    pub fn weight(&self) -> f64 {
        self.dv() * self.dv()
    }
}

/// Scalar field sampled at every node of a time grid.
#[derive(Debug, Clone)]
pub struct SpaceTimeField {
    pub grid: PeriodicGrid,
    pub times: TimeGrid,
    pub slices: Vec<ScalarField2D>,
}

impl SpaceTimeField {
    pub fn new(grid: PeriodicGrid, times: TimeGrid, slices: Vec<ScalarField2D>) -> Result<Self> {
        if slices.len() != times.len() {
            return Err(Error::GridMismatch(format!("{} slices for {} time nodes", slices.len(), times.len())));
        }
        for s in &slices {
            grid.check_same(&s.grid)?;
        }
        Ok(SpaceTimeField { grid, times, slices })
    }

    pub fn zeros(grid: PeriodicGrid, times: TimeGrid) -> Self {
        SpaceTimeField { grid, times, slices: vec![ScalarField2D::zeros(grid); times.len()] }
    }

    pub fn from_fn(grid: PeriodicGrid, times: TimeGrid, f: impl Fn(f64, [f64; 2]) -> f64) -> Self {
        let slices = times.nodes().map(|t| ScalarField2D::from_fn(grid, |x| f(t, x))).collect();
        SpaceTimeField { grid, times, slices }
    }

    /// Builds from per-node spectra.
    pub fn from_spectra(grid: PeriodicGrid, times: TimeGrid, spectra: Vec<Vec<Complex64>>) -> Self {
        let slices = spectra.into_iter().map(|s| ScalarField2D::from_spectrum(grid, s)).collect();
        SpaceTimeField { grid, times, slices }
    }

    pub fn check_compatible(&self, other: &SpaceTimeField) -> Result<()> {
        self.grid.check_same(&other.grid)?;
        if self.times != other.times {
            return Err(Error::GridMismatch(format!("time grids {:?} vs {:?}", self.times, other.times)));
        }
        Ok(())
    }

    pub fn map_slices(&self, f: impl Fn(&ScalarField2D) -> ScalarField2D) -> Self {
        SpaceTimeField { grid: self.grid, times: self.times, slices: self.slices.iter().map(f).collect() }
    }

    pub fn add(&self, other: &SpaceTimeField) -> Result<Self> {
        self.check_compatible(other)?;
        let slices = self.slices.iter().zip(&other.slices).map(|(a, b)| a.add(b)).collect();
        Ok(SpaceTimeField { grid: self.grid, times: self.times, slices })
    }

    pub fn sub(&self, other: &SpaceTimeField) -> Result<Self> {
        self.check_compatible(other)?;
        let slices = self.slices.iter().zip(&other.slices).map(|(a, b)| a.sub(b)).collect();
        Ok(SpaceTimeField { grid: self.grid, times: self.times, slices })
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map_slices(|f| f.scale(s))
    }

    /// Largest pointwise value over all slices.
    pub fn sup_norm(&self) -> f64 {
        self.slices.iter().fold(0.0, |m, s| m.max(s.sup_norm()))
    }

    /// First `m + 1` time slices.
    pub fn truncated(&self, m: usize) -> Result<Self> {
        Ok(SpaceTimeField { grid: self.grid, times: self.times.truncated(m)?, slices: self.slices[..=m].to_vec() })
    }

    pub fn spectra(&self) -> Vec<&[Complex64]> {
        self.slices.iter().map(|s| s.spectrum()).collect()
    }
}

/// Vector field sampled at every node of a time grid.
#[derive(Debug, Clone)]
pub struct VectorSpaceTimeField {
    pub grid: PeriodicGrid,
    pub times: TimeGrid,
    pub slices: Vec<VectorField2D>,
}

impl VectorSpaceTimeField {
    pub fn zeros(grid: PeriodicGrid, times: TimeGrid) -> Self {
        let z = ScalarField2D::zeros(grid);
        VectorSpaceTimeField {
            grid,
            times,
            slices: vec![VectorField2D { components: [z.clone(), z] }; times.len()],
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.slices.iter().fold(0.0, |m, s| m.max(s.sup_norm()))
    }
}

/// `ρ(t, x)` over a time interval, with a per-node `(t, ‖ρ‖_{L¹}, ‖ρ‖_{L∞})` ledger.
#[derive(Debug, Clone)]
pub struct DensityTrajectory {
    pub rho: SpaceTimeField,
}

impl DensityTrajectory {
    pub fn new(rho: SpaceTimeField) -> Self {
        DensityTrajectory { rho }
    }

    pub fn times(&self) -> TimeGrid {
        self.rho.times
    }

    pub fn grid(&self) -> PeriodicGrid {
        self.rho.grid
    }

    pub fn ledger(&self) -> Vec<[f64; 3]> {
        self.rho.times.nodes().zip(&self.rho.slices).map(|(t, s)| [t, s.l1_norm(), s.sup_norm()]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn time_grid_basics() {
        assert!(TimeGrid::new(1.0, 1).is_err());
        assert!(TimeGrid::new(0.0, 4).is_err());
        let t = TimeGrid::from_step(2.0, 0.5).unwrap();
        assert_eq!(t.steps, 4);
        assert_eq!(t.node(3), 1.5);
        assert_eq!(t.truncated(2).unwrap().end(), 1.0);
    }

    #[test]
    fn compatibility_checked() {
        let g = PeriodicGrid::new(1.0, 8).unwrap();
        let a = SpaceTimeField::zeros(g, TimeGrid::new(1.0, 4).unwrap());
        let b = SpaceTimeField::zeros(g, TimeGrid::new(1.0, 5).unwrap());
        assert!(matches!(a.add(&b), Err(Error::GridMismatch(_))));
    }
}
