use rayon::prelude::*;

use super::InitialData;
use crate::equilibria::EquilibriumProfile;
use crate::error::{Error, Result};
use crate::norms::shifted;
use crate::snapshot::PhaseSnapshot;
use crate::spacetime::{SpaceTimeField, TimeGrid, VelocityGrid};
use crate::spectral_field::{electric_field, solve_semilinear, NonlinearityA, PeriodicGrid, ScalarField2D, SemilinearConfig};

/// Strang-split spectral semi-Lagrangian evolution of `f` on the full phase
/// grid. Only used to cross-check the fixed-point density.
#[derive(Debug, Clone)]
pub struct SemiLagrangian<'a> {
    pub x_grid: PeriodicGrid,
    pub v_grid: VelocityGrid,
    pub profile: &'a EquilibriumProfile,
    pub nonlinearity: NonlinearityA,
    pub semilinear: SemilinearConfig,
    /// Splitting steps per output step.
    pub substeps: usize,
}

#[derive(Debug, Clone)]
pub struct OracleRun {
    pub rho: SpaceTimeField,
    /// `∫∫ f dx dv` at every output node.
    pub mass: Vec<f64>,
    pub final_f: PhaseSnapshot,
}

impl OracleRun {
    pub fn mass_drift(&self) -> f64 {
        let m0 = self.mass[0];
        if m0 == 0.0 {
            return 0.0;
        }
        self.mass.iter().map(|m| ((m - m0) / m0).abs()).fold(0.0, f64::max)
    }
}

impl<'a> SemiLagrangian<'a> {
    fn v_lattice(&self) -> Result<PeriodicGrid> {
        PeriodicGrid::new(self.v_grid.v_max, self.v_grid.n)
            .map_err(|e| e.context("semi-Lagrangian velocity grid needs a power-of-two size"))
    }

    fn density(&self, f: &[f64]) -> Result<ScalarField2D> {
        let nv2 = self.v_grid.n * self.v_grid.n;
        let w = self.v_grid.weight();
        ScalarField2D::new(self.x_grid, f.chunks(nv2).map(|c| c.iter().sum::<f64>() * w).collect())
    }

    fn advect_x(&self, f: &mut [f64], vs: &[[f64; 2]], h: f64) -> Result<()> {
        let nv2 = vs.len();
        let nx2 = self.x_grid.len();
        let cols: Vec<Vec<f64>> = (0..nv2)
            .into_par_iter()
            .map(|iv| {
                let col = ScalarField2D::new(self.x_grid, (0..nx2).map(|ix| f[ix * nv2 + iv]).collect()).expect("grid");
                shifted(&col, [vs[iv][0] * h, vs[iv][1] * h]).values
            })
            .collect();
        for (iv, col) in cols.into_iter().enumerate() {
            for (ix, val) in col.into_iter().enumerate() {
                f[ix * nv2 + iv] = val;
            }
        }
        Ok(())
    }

    fn kick_v(&self, f: &mut [f64], vs: &[[f64; 2]], h: f64) -> Result<()> {
        let rho = self.density(f)?;
        let u = solve_semilinear(&rho, &self.nonlinearity, &self.semilinear)?.u;
        let e = electric_field(&u);
        let vl = self.v_lattice()?;
        let nv2 = vs.len();
        let mu = |v: [f64; 2]| self.profile.eval_mu(v).unwrap_or(0.0);
        f.par_chunks_mut(nv2).enumerate().for_each(|(ix, chunk)| {
            let a = [e.components[0].values[ix] * h, e.components[1].values[ix] * h];
            let slice = ScalarField2D::new(vl, chunk.to_vec()).expect("grid");
            let moved = shifted(&slice, a);
            for (iv, out) in chunk.iter_mut().enumerate() {
                let v = vs[iv];
                *out = moved.values[iv] + mu([v[0] - a[0], v[1] - a[1]]) - mu(v);
            }
        });
        Ok(())
    }

    pub fn run(&self, f0: &InitialData, times: TimeGrid) -> Result<OracleRun> {
        if self.substeps == 0 {
            return Err(Error::InvalidArgument("substeps must be positive".into()));
        }
        self.v_lattice()?;
        let vs = self.v_grid.nodes();
        let grid = self.x_grid;
        let mut f: Vec<f64> = (0..grid.len())
            .flat_map(|ix| {
                let x = grid.point(ix);
                vs.iter().map(move |&v| f0.value_periodic(&grid, x, v))
            })
            .collect();
        let h = times.dt() / self.substeps as f64;
        let cell = grid.dx() * grid.dx() * self.v_grid.weight();
        let mut slices = vec![self.density(&f)?];
        let mut mass = vec![f.iter().sum::<f64>() * cell];
        for m in 1..times.len() {
            for _ in 0..self.substeps {
                self.advect_x(&mut f, &vs, 0.5 * h)?;
                self.kick_v(&mut f, &vs, h).map_err(|e| e.context(format!("oracle step to t = {}", times.node(m))))?;
                self.advect_x(&mut f, &vs, 0.5 * h)?;
            }
            slices.push(self.density(&f)?);
            mass.push(f.iter().sum::<f64>() * cell);
        }
        let final_f = PhaseSnapshot {
            nx: grid.n,
            nv: self.v_grid.n,
            half_length: grid.half_length,
            v_max: self.v_grid.v_max,
            time: times.end(),
            values: f,
        };
        Ok(OracleRun { rho: SpaceTimeField::new(grid, times, slices)?, mass, final_f })
    }
}
