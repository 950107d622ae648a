use rayon::prelude::*;

use super::{japanese, Exponent};
use crate::error::{Error, Result};
use crate::spectral_field::PeriodicGrid;

/// The phase perturbation `φ(x, v)` of the averaging lemma.
pub trait Perturbation: Sync {
    fn value(&self, x: [f64; 2], v: [f64; 2]) -> [f64; 2];
    /// Operator norm of `∇_{x,v} φ` at a point.
    fn gradient_norm(&self, x: [f64; 2], v: [f64; 2]) -> f64;
}

/// No perturbation.
impl Perturbation for () {
    fn value(&self, _x: [f64; 2], _v: [f64; 2]) -> [f64; 2] {
        [0.0, 0.0]
    }

    fn gradient_norm(&self, _x: [f64; 2], _v: [f64; 2]) -> f64 {
        0.0
    }
}

/// Ratio of `‖∫H(φ + x − (t−s)v)⟨v⟩^{-3} dv‖_{L^p_x}` to
/// `t^{-2(p−1)/p}‖H‖_{L¹}`.
///
/// The velocity integral is taken in the variable `w = x − (t−s)v`, so both
/// `w` and `x` run over the nodes of `grid`. `H` must be negligible outside
/// the box; the `L¹_x` norm is truncated to the box. The Lipschitz gate is
/// checked at every quadrature point.
pub fn dispersive_average_check(
    h: &(dyn Fn([f64; 2]) -> f64 + Sync),
    phi: &dyn Perturbation,
    grid: PeriodicGrid,
    s: f64,
    t: f64,
    p: Exponent,
) -> Result<f64> {
    let tau = t - s;
    if !(tau > 0.0) || s < 0.0 {
        return Err(Error::InvalidArgument(format!("need 0 <= s < t, got s = {s}, t = {t}")));
    }
    let dx2 = grid.dx() * grid.dx();
    let nodes: Vec<[f64; 2]> = (0..grid.len()).map(|i| grid.point(i)).collect();
    let h_l1: f64 = nodes.iter().map(|&w| h(w).abs()).sum::<f64>() * dx2;
    if h_l1 == 0.0 {
        return Ok(0.0);
    }
    let jac = dx2 / (tau * tau);
    let rows: Vec<(f64, f64)> = nodes
        .par_iter()
        .map(|&x| {
            let mut acc = 0.0;
            let mut lip = 0.0f64;
            for &w in &nodes {
                let v = [(x[0] - w[0]) / tau, (x[1] - w[1]) / tau];
                let d = phi.value(x, v);
                lip = lip.max(phi.gradient_norm(x, v));
                acc += h([w[0] + d[0], w[1] + d[1]]) * japanese(v[0].hypot(v[1])).powi(-3);
            }
            (acc * jac, lip)
        })
        .collect();
    let lip = rows.iter().fold(0.0f64, |m, r| m.max(r.1));
    if lip > 0.5 {
        return Err(Error::LipschitzGate(lip));
    }
    let lhs = match p {
        Exponent::One => rows.iter().map(|r| r.0.abs()).sum::<f64>() * dx2,
        Exponent::Infinity => rows.iter().fold(0.0f64, |m, r| m.max(r.0.abs())),
    };
    Ok(lhs / (t.powf(-p.decay_weight()) * h_l1))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss(x: [f64; 2]) -> f64 {
        (-(x[0] * x[0] + x[1] * x[1]) / 2.0).exp()
    }

    struct Wobble(f64);

    impl Perturbation for Wobble {
        fn value(&self, x: [f64; 2], v: [f64; 2]) -> [f64; 2] {
            [self.0 * (x[1] + v[0]).sin(), self.0 * (x[0] - v[1]).cos()]
        }

        fn gradient_norm(&self, _x: [f64; 2], _v: [f64; 2]) -> f64 {
            // Each component has a gradient of norm at most √2·|c|.
            2.0 * self.0.abs()
        }
    }

    #[test]
    fn zero_h_gives_zero() {
        let grid = PeriodicGrid::new(8.0, 16).unwrap();
        let r = dispersive_average_check(&|_| 0.0, &(), grid, 0.0, 2.0, Exponent::Infinity).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn gaussian_ratio_bounded_in_time() {
        let grid = PeriodicGrid::new(8.0, 32).unwrap();
        let mut worst = 0.0f64;
        for k in 0..7 {
            let t = 2f64.powi(k);
            let r = dispersive_average_check(&gauss, &(), grid, 0.0, t, Exponent::Infinity).unwrap();
            // Without φ, ⟨v⟩^{-3} ≤ 1 gives ratio ≤ 1 up to quadrature error.
            assert!(r < 1.05, "t = {t}: {r}");
            worst = worst.max(r);
        }
        assert!(worst > 0.1);
    }

    #[test]
    fn l1_ratio_matches_fubini_bound() {
        let grid = PeriodicGrid::new(8.0, 32).unwrap();
        let r = dispersive_average_check(&gauss, &(), grid, 0.0, 1.0, Exponent::One).unwrap();
        assert!(r <= 2.0 * std::f64::consts::PI * 1.01);
    }

    #[test]
    fn lipschitz_gate() {
        let grid = PeriodicGrid::new(8.0, 16).unwrap();
        let e = dispersive_average_check(&gauss, &Wobble(0.4), grid, 0.0, 2.0, Exponent::One).unwrap_err();
        assert!(matches!(e, Error::LipschitzGate(_)));
        assert!(dispersive_average_check(&gauss, &Wobble(0.2), grid, 0.0, 2.0, Exponent::One).is_ok());
    }
}
