use rayon::prelude::*;

use super::{Exponent, NormReport, ShiftSet};
use crate::error::{Error, Result};
use crate::spacetime::VelocityGrid;
use crate::spectral_field::PeriodicGrid;

/// A phase-space function with its gradient `[∂x₁, ∂x₂, ∂v₁, ∂v₂]`.
pub trait PhaseFunction: Sync {
    fn value_grad(&self, x: [f64; 2], v: [f64; 2]) -> (f64, [f64; 4]);

    fn value(&self, x: [f64; 2], v: [f64; 2]) -> f64 {
        self.value_grad(x, v).0
    }
}

fn dist(a: &[f64; 5], b: &[f64; 5], range: std::ops::Range<usize>) -> f64 {
    range.map(|k| (a[k] - b[k]).powi(2)).sum::<f64>().sqrt()
}

fn pack(f: &dyn PhaseFunction, x: [f64; 2], v: [f64; 2]) -> [f64; 5] {
    let (h, g) = f.value_grad(x, v);
    [h, g[0], g[1], g[2], g[3]]
}

/// `|||f₀|||_{1+a}`: `Σ_p Σ_{i≤1} ‖𝒟^a ∇^i f₀‖` in the intersection of
/// `L¹_x L^p_v` and `L¹_v L^p_x`, each mixed norm read outer-integral first.
/// The intersection is the larger of the two orderings. Hölder quotients use
/// the shift set separately in `x` and in `v`, with `f₀` evaluated off the
/// grid (no periodic wrap).
pub fn triple_norm_initial(
    f0: &dyn PhaseFunction,
    a: f64,
    x_grid: PeriodicGrid,
    v_grid: VelocityGrid,
    shifts: &ShiftSet,
) -> Result<NormReport> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::InvalidArgument(format!("Hölder index must lie in (0,1), got {a}")));
    }
    let alphas: Vec<([f64; 2], f64)> = shifts.shifts().into_iter().map(|z| (z, z[0].hypot(z[1]).powf(-a))).collect();
    let vs = v_grid.nodes();
    let nv = vs.len();
    // d[x][v] = (𝒟^a h, 𝒟^a ∇h)
    let d: Vec<Vec<[f64; 2]>> = (0..x_grid.len())
        .into_par_iter()
        .map(|ix| {
            let x = x_grid.point(ix);
            vs.iter()
                .map(|&v| {
                    let c = pack(f0, x, v);
                    let mut hx = [0.0f64; 2];
                    let mut hv = [0.0f64; 2];
                    for &(z, w) in &alphas {
                        let sx = pack(f0, [x[0] - z[0], x[1] - z[1]], v);
                        let sv = pack(f0, x, [v[0] - z[0], v[1] - z[1]]);
                        hx[0] = hx[0].max(w * (c[0] - sx[0]).abs());
                        hv[0] = hv[0].max(w * (c[0] - sv[0]).abs());
                        hx[1] = hx[1].max(w * dist(&c, &sx, 1..5));
                        hv[1] = hv[1].max(w * dist(&c, &sv, 1..5));
                    }
                    let g = c[1..].iter().map(|q| q * q).sum::<f64>().sqrt();
                    [c[0].abs() + hx[0] + hv[0], g + hx[1] + hv[1]]
                })
                .collect()
        })
        .collect();
    let dx2 = x_grid.dx() * x_grid.dx();
    let dv2 = v_grid.weight();
    let mut comps = Vec::new();
    for p in Exponent::BOTH {
        for i in 0..2 {
            let (xv, vx) = match p {
                Exponent::One => {
                    let s: f64 = d.iter().flat_map(|row| row.iter().map(|q| q[i])).sum::<f64>() * dx2 * dv2;
                    (s, s)
                }
                Exponent::Infinity => {
                    let xv: f64 = d.iter().map(|row| row.iter().fold(0.0f64, |m, q| m.max(q[i]))).sum::<f64>() * dx2;
                    let vx: f64 = (0..nv).map(|iv| d.iter().fold(0.0f64, |m, row| m.max(row[iv][i]))).sum::<f64>() * dv2;
                    (xv, vx)
                }
            };
            let val = xv.max(vx);
            if !val.is_finite() {
                return Err(Error::NormTruncationBreach(format!("component i={i}, p={} is not finite", p.label())));
            }
            comps.push((format!("i{i}_p{}", p.label()), val));
        }
    }
    Ok(NormReport::new(comps, a).with_shifts(shifts.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Gauss(f64);

    impl PhaseFunction for Gauss {
        fn value_grad(&self, x: [f64; 2], v: [f64; 2]) -> (f64, [f64; 4]) {
            let r = (x[0] * x[0] + x[1] * x[1] + v[0] * v[0] + v[1] * v[1]) / 2.0;
            let h = self.0 * (-r).exp();
            (h, [-x[0] * h, -x[1] * h, -v[0] * h, -v[1] * h])
        }
    }

    fn grids(nx: usize, nv: usize) -> (PeriodicGrid, VelocityGrid) {
        (PeriodicGrid::new(6.0, nx).unwrap(), VelocityGrid::new(nv, 6.0).unwrap())
    }

    #[test]
    fn zero_data_has_zero_norm() {
        let (xg, vg) = grids(8, 8);
        let r = triple_norm_initial(&Gauss(0.0), 0.5, xg, vg, &ShiftSet::standard(2.0).unwrap()).unwrap();
        assert_eq!(r.total, 0.0);
    }

    #[test]
    fn linear_in_amplitude() {
        let (xg, vg) = grids(8, 8);
        let s = ShiftSet::standard(2.0).unwrap();
        let r1 = triple_norm_initial(&Gauss(1.0), 0.5, xg, vg, &s).unwrap();
        let r2 = triple_norm_initial(&Gauss(-0.25), 0.5, xg, vg, &s).unwrap();
        assert!((r2.total - 0.25 * r1.total).abs() < 1e-14 * r1.total);
    }

    #[test]
    fn stable_under_refinement() {
        let s = ShiftSet::standard(2.0).unwrap();
        let (xg, vg) = grids(16, 16);
        let coarse = triple_norm_initial(&Gauss(1.0), 0.5, xg, vg, &s).unwrap().total;
        let (xg, vg) = grids(32, 32);
        let fine = triple_norm_initial(&Gauss(1.0), 0.5, xg, vg, &ShiftSet::new(0.5, 12).unwrap()).unwrap().total;
        assert!((fine / coarse - 1.0).abs() < 0.05, "{coarse} {fine}");
    }

    #[test]
    fn non_finite_data_breaches() {
        struct Blow;
        impl PhaseFunction for Blow {
            fn value_grad(&self, x: [f64; 2], _v: [f64; 2]) -> (f64, [f64; 4]) {
                (1.0 / x[0].abs().min(0.0), [0.0; 4])
            }
        }
        let (xg, vg) = grids(8, 8);
        let e = triple_norm_initial(&Blow, 0.5, xg, vg, &ShiftSet::standard(2.0).unwrap()).unwrap_err();
        assert!(matches!(e, Error::NormTruncationBreach(_)));
    }
}
