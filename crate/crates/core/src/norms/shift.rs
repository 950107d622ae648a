use crate::error::{Error, Result};

/// Finite stand-in for `sup_α`: dyadic magnitudes `h₀·2^{-j}`, `j = 0..=J`,
/// along the axes and diagonals.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftSet {
    pub h0: f64,
    pub levels: usize,
    pub directions: Vec<[f64; 2]>,
}

impl ShiftSet {
    pub fn new(h0: f64, levels: usize) -> Result<Self> {
        if !(h0 > 0.0) || !h0.is_finite() {
            return Err(Error::InvalidArgument(format!("shift h0 must be positive, got {h0}")));
        }
        let d = std::f64::consts::FRAC_1_SQRT_2;
        Ok(ShiftSet { h0, levels, directions: vec![[1.0, 0.0], [0.0, 1.0], [d, d], [d, -d]] })
    }

    /// `h₀ = scale/4`, ten octaves below it.
    pub fn standard(scale: f64) -> Result<Self> {
        Self::new(scale / 4.0, 10)
    }

    /// Checks every shift fits in a box of half-width `half_width`.
    pub fn check_domain(&self, half_width: f64) -> Result<()> {
        if self.h0 > half_width {
            return Err(Error::InvalidArgument(format!("largest shift {} exceeds domain half-width {half_width}", self.h0)));
        }
        Ok(())
    }

    pub fn magnitudes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.levels).map(move |j| self.h0 * 0.5f64.powi(j as i32))
    }

    pub fn smallest(&self) -> f64 {
        self.h0 * 0.5f64.powi(self.levels as i32)
    }

    /// Every shift vector `α`.
    pub fn shifts(&self) -> Vec<[f64; 2]> {
        self.magnitudes()
            .flat_map(|m| self.directions.iter().map(move |d| [m * d[0], m * d[1]]))
            .collect()
    }

    pub fn len(&self) -> usize {
        (self.levels + 1) * self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }
}
