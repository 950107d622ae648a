use rayon::prelude::*;

use super::besov::lp_norm;
use super::{besov_seminorm, besov_seminorm_vector, japanese, Exponent, NormReport, ShiftSet};
use crate::error::{Error, Result};
use crate::spacetime::SpaceTimeField;
use crate::spectral_field::ScalarField2D;

/// Per-node weighted terms of `‖g‖_{m+γ,T}`, one column per `(j, p)`.
#[derive(Debug, Clone)]
pub struct TrajectoryTerms {
    pub names: Vec<String>,
    /// `values[node][column]`.
    pub values: Vec<Vec<f64>>,
}

impl TrajectoryTerms {
    /// Sum over columns of the sup over nodes `0..=n`, for each `n`.
    pub fn running_totals(&self) -> Vec<f64> {
        let mut best = vec![0.0f64; self.names.len()];
        self.values
            .iter()
            .map(|row| {
                for (b, v) in best.iter_mut().zip(row) {
                    *b = b.max(*v);
                }
                best.iter().sum()
            })
            .collect()
    }

    pub fn column_sups(&self) -> Vec<f64> {
        let mut best = vec![0.0f64; self.names.len()];
        for row in &self.values {
            for (b, v) in best.iter_mut().zip(row) {
                *b = b.max(*v);
            }
        }
        best
    }
}

/// `⟨s⟩^{2(p−1)/p}‖g‖_p + ⟨s⟩^{j+γ+2(p−1)/p}‖∇^j g‖_{Ḃ^γ_p}` for each
/// `j ≤ m`, `p ∈ {1, ∞}` at a single time.
pub fn node_terms(g: &ScalarField2D, s: f64, m: usize, gamma: f64, shifts: &ShiftSet) -> Result<Vec<f64>> {
    let dx2 = g.grid.dx() * g.grid.dx();
    let grad = if m >= 1 { Some(g.gradient()) } else { None };
    let ws = japanese(s);
    let mut out = Vec::with_capacity(2 * (m + 1));
    for j in 0..=m {
        for p in Exponent::BOTH {
            let plain = ws.powf(p.decay_weight()) * lp_norm(&g.values, dx2, p);
            let semi = match (j, &grad) {
                (0, _) => besov_seminorm(g, gamma, p, shifts)?,
                (_, Some(v)) => besov_seminorm_vector(v, gamma, p, shifts)?,
                _ => unreachable!(),
            };
            out.push(plain + ws.powf(j as f64 + gamma + p.decay_weight()) * semi);
        }
    }
    Ok(out)
}

fn check_order(m: usize, gamma: f64) -> Result<()> {
    if m > 1 {
        return Err(Error::InvalidArgument(format!("trajectory norm order m must be 0 or 1, got {m}")));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidArgument(format!("Hölder index must lie in (0,1), got {gamma}")));
    }
    Ok(())
}

/// All per-node terms, evaluated in parallel over time nodes.
pub fn trajectory_terms(g: &SpaceTimeField, m: usize, gamma: f64, shifts: &ShiftSet) -> Result<TrajectoryTerms> {
    check_order(m, gamma)?;
    let names = (0..=m)
        .flat_map(|j| Exponent::BOTH.into_iter().map(move |p| format!("j{j}_p{}", p.label())))
        .collect();
    let values = g
        .slices
        .par_iter()
        .enumerate()
        .map(|(n, slice)| node_terms(slice, g.times.node(n), m, gamma, shifts))
        .collect::<Result<_>>()?;
    Ok(TrajectoryTerms { names, values })
}

/// `‖g‖_{m+γ,T}` over every node of `g`, itemized per `(j, p)`.
pub fn trajectory_norm(g: &SpaceTimeField, m: usize, gamma: f64, shifts: &ShiftSet) -> Result<NormReport> {
    let terms = trajectory_terms(g, m, gamma, shifts)?;
    let comps = terms.names.iter().cloned().zip(terms.column_sups()).collect();
    Ok(NormReport::new(comps, gamma).with_horizon(g.times.end()).with_shifts(shifts.clone()))
}

/// `‖g‖_{m+γ,t_n}` for every node `t_n`; non-decreasing by construction.
pub fn trajectory_norm_running(g: &SpaceTimeField, m: usize, gamma: f64, shifts: &ShiftSet) -> Result<Vec<f64>> {
    Ok(trajectory_terms(g, m, gamma, shifts)?.running_totals())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spacetime::TimeGrid;
    use crate::spectral_field::PeriodicGrid;

    fn bump(x: [f64; 2]) -> f64 {
        (-(x[0] * x[0] + x[1] * x[1]) / 2.0).exp()
    }

    #[test]
    fn zero_field_has_zero_norm() {
        let grid = PeriodicGrid::new(8.0, 32).unwrap();
        let g = SpaceTimeField::zeros(grid, TimeGrid::new(2.0, 4).unwrap());
        let r = trajectory_norm(&g, 1, 0.5, &ShiftSet::standard(2.0).unwrap()).unwrap();
        assert!(r.components.iter().all(|c| c.1 == 0.0));
    }

    #[test]
    fn sup_weight_cancels_decay() {
        let grid = PeriodicGrid::new(8.0, 32).unwrap();
        let times = TimeGrid::new(10.0, 20).unwrap();
        let g = SpaceTimeField::from_fn(grid, times, |s, x| bump(x) / (1.0 + s * s));
        let terms = trajectory_terms(&g, 0, 0.5, &ShiftSet::standard(2.0).unwrap()).unwrap();
        for (n, row) in terms.values.iter().enumerate() {
            let s = times.node(n);
            let semi = besov_seminorm(&g.slices[n], 0.5, Exponent::Infinity, &ShiftSet::standard(2.0).unwrap()).unwrap();
            let plain = row[1] - japanese(s).powf(2.5) * semi;
            assert!((plain - 1.0).abs() < 1e-12, "{plain}");
        }
    }

    #[test]
    fn homogeneous_and_monotone_in_horizon() {
        let grid = PeriodicGrid::new(8.0, 32).unwrap();
        let times = TimeGrid::new(4.0, 8).unwrap();
        let shifts = ShiftSet::standard(2.0).unwrap();
        let g = SpaceTimeField::from_fn(grid, times, |s, x| bump([x[0] - s, x[1]]) * (1.0 + 0.3 * s));
        let r = trajectory_norm(&g, 1, 0.5, &shifts).unwrap();
        let r3 = trajectory_norm(&g.scale(-3.0), 1, 0.5, &shifts).unwrap();
        assert!((r3.total - 3.0 * r.total).abs() < 1e-12 * r3.total);
        let running = trajectory_norm_running(&g, 1, 0.5, &shifts).unwrap();
        assert!(running.windows(2).all(|w| w[1] >= w[0]));
        assert!((running.last().unwrap() - r.total).abs() < 1e-12 * r.total);
    }

    #[test]
    fn rejects_bad_order() {
        let grid = PeriodicGrid::new(8.0, 32).unwrap();
        let g = SpaceTimeField::zeros(grid, TimeGrid::new(2.0, 4).unwrap());
        assert!(trajectory_norm(&g, 2, 0.5, &ShiftSet::standard(2.0).unwrap()).is_err());
    }
}
