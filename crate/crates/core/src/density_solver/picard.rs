use super::operators::{fused_march, prefix_grid, MarchSpec, PhaseQuadrature};
use super::InitialData;
use crate::characteristics::{FieldSampler, SpatialInterp};
use crate::equilibria::EquilibriumProfile;
use crate::error::{Error, Result};
use crate::linear_response::{BankConfig, ResolventBank};
use crate::norms::{besov_seminorm_vector, node_terms, Exponent, ShiftSet};
use crate::spacetime::{SpaceTimeField, TimeGrid, VelocityGrid};
use crate::spectral_field::solve::nonlinear_term;
use crate::spectral_field::{solve_semilinear, NonlinearityA, PeriodicGrid, ScalarField2D, SemilinearConfig};

/// Knobs of the fixed-point solve and its continuation.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub x_grid: PeriodicGrid,
    pub v_grid: VelocityGrid,
    pub dt: f64,
    /// Slab length `T₀`; a whole number of steps, at least two.
    pub slab: f64,
    pub horizon: f64,
    /// Hölder index `a`.
    pub holder: f64,
    /// Picard stops once the relative update, or its a-posteriori error
    /// bound from the observed contraction, is below `picard_tol`.
    pub picard_tol: f64,
    pub max_picard: usize,
    /// Ledger threshold `ε₁` on `‖ρ‖_{1+a,t} + ‖U‖_{1+a,t}`.
    pub eps1: f64,
    /// Gate `ε₂` on the initial density norms.
    pub eps2: f64,
    pub shifts: ShiftSet,
    pub semilinear: SemilinearConfig,
}

impl SolverConfig {
    pub fn new(x_grid: PeriodicGrid, v_grid: VelocityGrid, dt: f64, slab: f64, horizon: f64) -> Result<Self> {
        let cfg = SolverConfig {
            x_grid,
            v_grid,
            dt,
            slab,
            horizon,
            holder: 0.5,
            picard_tol: 1e-8,
            max_picard: 20,
            eps1: 0.5,
            eps2: 0.1,
            shifts: ShiftSet::standard(2.0)?,
            semilinear: SemilinearConfig::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn slab_steps(&self) -> usize {
        (self.slab / self.dt).round() as usize
    }

    pub fn total_steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let whole = |x: f64| (x / self.dt - (x / self.dt).round()).abs() < 1e-9;
        if !(self.dt > 0.0) || !whole(self.slab) || !whole(self.horizon) {
            return Err(Error::InvalidArgument(format!(
                "slab {} and horizon {} must be whole multiples of dt = {}",
                self.slab, self.horizon, self.dt
            )));
        }
        if self.slab_steps() < 2 || self.total_steps() < self.slab_steps() {
            return Err(Error::InvalidArgument("need at least two steps per slab and horizon >= slab".into()));
        }
        if !(self.holder > 0.0 && self.holder < 1.0) {
            return Err(Error::InvalidArgument(format!("Hölder index must lie in (0,1), got {}", self.holder)));
        }
        if !(self.picard_tol > 0.0 && self.eps1 > 0.0 && self.eps2 > 0.0) {
            return Err(Error::InvalidArgument("tolerances and gates must be positive".into()));
        }
        Ok(())
    }

    pub fn full_times(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.total_steps() as f64 * self.dt, self.total_steps())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BootstrapStatus {
    Continuing,
    Converged,
    ThresholdBreach(String),
}

impl BootstrapStatus {
    pub fn label(&self) -> &'static str {
        match self {
            BootstrapStatus::Continuing => "continuing",
            BootstrapStatus::Converged => "converged",
            BootstrapStatus::ThresholdBreach(_) => "threshold-breach",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapState {
    pub horizon: f64,
    pub eps1: f64,
    pub status: BootstrapStatus,
}

/// One ledger line per frozen node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedgerRow {
    pub t: f64,
    pub mass: f64,
    pub rho_l1: f64,
    pub rho_linf: f64,
    /// Running `‖ρ‖_{1+a,t}`.
    pub rho_norm: f64,
    /// Running `‖U‖_{1+a,t}`.
    pub u_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlabLog {
    pub start: f64,
    pub end: f64,
    /// Relative update sizes, one per Picard iterate.
    pub updates: Vec<f64>,
}

/// Trajectory produced by the fixed point, with its bookkeeping.
#[derive(Debug, Clone)]
pub struct Solution {
    pub rho: SpaceTimeField,
    pub u: SpaceTimeField,
    /// `𝔤 = ρ + A(U)`.
    pub g: SpaceTimeField,
    pub ledger: Vec<LedgerRow>,
    pub slabs: Vec<SlabLog>,
    pub state: BootstrapState,
    /// Initial density norm checked against `ε₂`.
    pub initial_norm: f64,
}

impl Solution {
    pub fn ledger_total(&self) -> f64 {
        self.ledger.last().map_or(0.0, |r| r.rho_norm + r.u_norm)
    }

    /// Largest `|∫ρ(t) − ∫ρ(0)| / |∫ρ(0)|` over the trajectory.
    pub fn mass_drift(&self) -> f64 {
        let m0 = self.ledger.first().map_or(0.0, |r| r.mass);
        if m0 == 0.0 {
            return 0.0;
        }
        self.ledger.iter().map(|r| ((r.mass - m0) / m0).abs()).fold(0.0, f64::max)
    }

    /// `ε₁`-ledger relative to the initial density norm, the constant `C₂`.
    pub fn local_constant(&self) -> f64 {
        if self.initial_norm == 0.0 { 0.0 } else { self.ledger_total() / self.initial_norm }
    }

    pub fn flows(&self) -> FieldSampler {
        FieldSampler::from_density(&self.g, SpatialInterp::CubicSpline)
    }
}

/// Everything `𝓙` needs besides `ρ`.
pub struct DensitySolver<'a> {
    pub cfg: SolverConfig,
    pub f0: InitialData,
    pub profile: &'a EquilibriumProfile,
    pub nonlinearity: NonlinearityA,
    pub bank: ResolventBank,
    pub quad: PhaseQuadrature,
    pub times: TimeGrid,
}

/// Values of `𝓙(ρ)` and the intermediates worth caching.
#[derive(Debug, Clone)]
pub struct JEvaluation {
    pub rho: Vec<ScalarField2D>,
    pub u: Vec<ScalarField2D>,
    /// `A(U)`.
    pub au: Vec<ScalarField2D>,
    /// `𝓘 + 𝓡`.
    pub source: Vec<ScalarField2D>,
}

fn density_gate(rho0: &ScalarField2D, a: f64, shifts: &ShiftSet) -> Result<f64> {
    let grad = rho0.gradient();
    let dx2 = rho0.grid.dx() * rho0.grid.dx();
    let mut total = 0.0;
    for p in Exponent::BOTH {
        let lp = match p {
            Exponent::One => rho0.values.iter().map(|v| v.abs()).sum::<f64>() * dx2,
            Exponent::Infinity => rho0.sup_norm(),
        };
        total += lp + besov_seminorm_vector(&grad, a, p, shifts)?;
    }
    Ok(total)
}

impl<'a> DensitySolver<'a> {
    pub fn new(cfg: SolverConfig, f0: InitialData, profile: &'a EquilibriumProfile, nonlinearity: NonlinearityA) -> Result<Self> {
        cfg.validate()?;
        let times = cfg.full_times()?;
        let bank = ResolventBank::build(profile, cfg.x_grid, times, BankConfig::default())?;
        let quad = PhaseQuadrature::new(cfg.x_grid, cfg.v_grid);
        Ok(DensitySolver { cfg, f0, profile, nonlinearity, bank, quad, times })
    }

    fn field_solve(&self, rho: &ScalarField2D) -> Result<(ScalarField2D, ScalarField2D)> {
        let sol = solve_semilinear(rho, &self.nonlinearity, &self.cfg.semilinear)?;
        let au = if self.nonlinearity.is_zero() {
            ScalarField2D::zeros(rho.grid)
        } else {
            nonlinear_term(&self.nonlinearity, &sol.u, self.cfg.semilinear.dealias)?
        };
        Ok((sol.u, au))
    }

    /// `𝓙(ρ)` on nodes `0..=m` (`m + 1 = rho.len()`). Nodes below `frozen`
    /// reuse `cache` instead of being recomputed.
    pub fn evaluate_j(&self, rho: &[ScalarField2D], frozen: usize, cache: Option<&JEvaluation>) -> Result<JEvaluation> {
        let m = rho.len() - 1;
        let times = prefix_grid(&self.times, m)?;
        let grid = self.cfg.x_grid;
        let mut u = Vec::with_capacity(m + 1);
        let mut au = Vec::with_capacity(m + 1);
        for (n, r) in rho.iter().enumerate() {
            match cache {
                Some(c) if n < frozen => {
                    u.push(c.u[n].clone());
                    au.push(c.au[n].clone());
                }
                _ => {
                    let (un, an) = self.field_solve(r).map_err(|e| e.context(format!("field solve at t = {}", times.node(n))))?;
                    u.push(un);
                    au.push(an);
                }
            }
        }
        let g: Vec<ScalarField2D> = rho.iter().zip(&au).map(|(r, a)| r.add(a)).collect();
        let g = SpaceTimeField::new(grid, times, g)?;
        let start = if cache.is_some() { frozen } else { 0 };
        let mut source: Vec<ScalarField2D> = match cache {
            Some(c) => c.source[..frozen].to_vec(),
            None => Vec::new(),
        };
        let free: Vec<ScalarField2D> = (start..=m).map(|n| self.f0.free_density(grid, times.node(n))).collect();
        if g.sup_norm() == 0.0 {
            source.extend(free);
        } else {
            let flows = FieldSampler::from_density(&g, SpatialInterp::CubicSpline);
            let grad = |v: [f64; 2]| self.profile.grad_mu(v).unwrap_or([0.0, 0.0]);
            let f0 = (!self.f0.is_zero()).then_some(&self.f0);
            let spec = MarchSpec { f0, forcing: None, eta: Some(&grad) };
            let parts = fused_march(&flows, &self.quad, start..=m, &spec)?;
            for (fr, p) in free.into_iter().zip(parts) {
                source.push(fr.add(&p.initial_correction).add(&p.reaction));
            }
        }
        let total: Vec<ScalarField2D> = source.iter().zip(&au).map(|(s, a)| s.add(a)).collect();
        let conv = self.bank.apply_g(&SpaceTimeField::new(grid, times, total)?)?;
        let rho_new = source.iter().zip(&conv.slices).map(|(s, c)| s.add(c)).collect();
        Ok(JEvaluation { rho: rho_new, u, au, source })
    }

    /// `‖·‖_{a,T}` of a node range (m = 0 terms, summed over p after the sup).
    fn a_norm(&self, slices: &[ScalarField2D], first: usize) -> Result<f64> {
        let mut sups = [0.0f64; 2];
        for (k, s) in slices.iter().enumerate() {
            let terms = node_terms(s, self.times.node(first + k), 0, self.cfg.holder, &self.cfg.shifts)?;
            for (m, t) in sups.iter_mut().zip(terms) {
                *m = m.max(t);
            }
        }
        Ok(sups.iter().sum())
    }

    /// Picard iteration on nodes `frozen..=m`, starting from free transport
    /// there. Returns the converged evaluation and the update log.
    fn solve_slab(&self, prefix: &[ScalarField2D], cache: Option<&JEvaluation>, m: usize) -> Result<(JEvaluation, Vec<f64>)> {
        let frozen = prefix.len();
        let mut rho: Vec<ScalarField2D> = prefix.to_vec();
        rho.extend((frozen..=m).map(|n| self.f0.free_density(self.cfg.x_grid, self.times.node(n))));
        let mut updates = Vec::new();
        let mut cache_now: Option<JEvaluation> = cache.cloned();
        for _ in 0..self.cfg.max_picard {
            let next = self.evaluate_j(&rho, frozen, cache_now.as_ref())?;
            let diff: Vec<ScalarField2D> = (frozen..=m).map(|n| next.rho[n].sub(&rho[n])).collect();
            let size = self.a_norm(&next.rho[frozen..], frozen)?;
            let update = self.a_norm(&diff, frozen)?;
            let rel = if size > 0.0 { update / size } else { 0.0 };
            updates.push(rel);
            rho = next.rho.clone();
            // Stop once the update, or the a-posteriori bound q/(1-q)·update
            // with the observed contraction q, is below tolerance.
            let bound = match updates.len() {
                n if n >= 2 && updates[n - 2] > 0.0 => {
                    let q = rel / updates[n - 2];
                    if q < 0.5 { rel * q / (1.0 - q) } else { rel }
                }
                _ => rel,
            };
            let done = rel <= self.cfg.picard_tol || bound <= self.cfg.picard_tol;
            cache_now = Some(next);
            if done {
                return Ok((cache_now.unwrap(), updates));
            }
            let k = updates.len();
            if k >= 4 && (k - 3..k).all(|i| updates[i] >= updates[i - 1]) {
                return Err(Error::LocalSolveDivergence { ratios: ratios(&updates) });
            }
        }
        Err(Error::LocalSolveDivergence { ratios: ratios(&updates) })
    }

    /// Fixed point on `[0, T₀]`.
    pub fn local_solve(&self) -> Result<Solution> {
        self.run(self.cfg.slab_steps(), true)
    }

    /// Slab-by-slab continuation up to the configured horizon, stopping early
    /// on a ledger breach. Gate failures are reported as breaches.
    pub fn continuation(&self) -> Result<Solution> {
        self.run(self.cfg.total_steps(), false)
    }

    fn run(&self, last: usize, strict: bool) -> Result<Solution> {
        let grid = self.cfg.x_grid;
        let rho0 = self.f0.free_density(grid, 0.0);
        let initial_norm = density_gate(&rho0, self.cfg.holder, &self.cfg.shifts)?;
        let mut state = BootstrapState { horizon: 0.0, eps1: self.cfg.eps1, status: BootstrapStatus::Continuing };
        let mut ledger: Vec<LedgerRow> = Vec::new();
        let mut slabs = Vec::new();
        let mut cache: Option<JEvaluation> = None;
        let breach = |reason: String, state: &mut BootstrapState| state.status = BootstrapStatus::ThresholdBreach(reason);
        if initial_norm > self.cfg.eps2 {
            let e = Error::SmallnessViolation { norm: initial_norm, gate: self.cfg.eps2 };
            if strict {
                return Err(e);
            }
            breach(e.to_string(), &mut state);
        }
        let mut sups_rho = vec![0.0f64; 4];
        let mut sups_u = vec![0.0f64; 4];
        let step = self.cfg.slab_steps();
        let mut end = 0usize;
        while state.status == BootstrapStatus::Continuing && end < last {
            let m = (end + step).min(last).max(2);
            let prefix: Vec<ScalarField2D> = match &cache {
                Some(c) => c.rho.clone(),
                None => Vec::new(),
            };
            let first_new = prefix.len();
            let (eval, updates) = match self.solve_slab(&prefix, cache.as_ref(), m) {
                Ok(r) => r,
                Err(e) if !strict && matches!(e.root(), Error::SmallnessViolation { .. } | Error::AssumptionWindowExceeded(_)) => {
                    breach(e.to_string(), &mut state);
                    break;
                }
                Err(e) => return Err(e.context(format!("slab ending at t = {}", self.times.node(m)))),
            };
            slabs.push(SlabLog { start: self.times.node(first_new.saturating_sub(1)), end: self.times.node(m), updates });
            for n in first_new..=m {
                let t = self.times.node(n);
                let tr = node_terms(&eval.rho[n], t, 1, self.cfg.holder, &self.cfg.shifts)?;
                let tu = node_terms(&eval.u[n], t, 1, self.cfg.holder, &self.cfg.shifts)?;
                for (s, v) in sups_rho.iter_mut().zip(tr) {
                    *s = s.max(v);
                }
                for (s, v) in sups_u.iter_mut().zip(tu) {
                    *s = s.max(v);
                }
                let r = &eval.rho[n];
                ledger.push(LedgerRow {
                    t,
                    mass: r.integral(),
                    rho_l1: r.l1_norm(),
                    rho_linf: r.sup_norm(),
                    rho_norm: sups_rho.iter().sum(),
                    u_norm: sups_u.iter().sum(),
                });
            }
            end = m;
            state.horizon = self.times.node(m);
            let total = ledger.last().map_or(0.0, |r| r.rho_norm + r.u_norm);
            if total > self.cfg.eps1 {
                breach(format!("ledger {total:.3e} exceeds eps1 = {:.3e} at t = {}", self.cfg.eps1, state.horizon), &mut state);
            }
            cache = Some(eval);
        }
        if state.status == BootstrapStatus::Continuing {
            state.status = BootstrapStatus::Converged;
        }
        let (rho, u, g) = match cache {
            Some(c) => {
                let times = prefix_grid(&self.times, c.rho.len() - 1)?;
                let g = c.rho.iter().zip(&c.au).map(|(r, a)| r.add(a)).collect();
                (
                    SpaceTimeField::new(grid, times, c.rho)?,
                    SpaceTimeField::new(grid, times, c.u)?,
                    SpaceTimeField::new(grid, times, g)?,
                )
            }
            None => {
                let times = prefix_grid(&self.times, 2)?;
                let z = SpaceTimeField::zeros(grid, times);
                (z.clone(), z.clone(), z)
            }
        };
        Ok(Solution { rho, u, g, ledger, slabs, state, initial_norm })
    }
}

fn ratios(updates: &[f64]) -> Vec<f64> {
    updates.windows(2).map(|w| w[1] / w[0]).collect()
}

/// `𝓙(ρ)` for a whole trajectory, recomputing everything.
pub fn picard_map_j(solver: &DensitySolver, rho: &SpaceTimeField) -> Result<SpaceTimeField> {
    let out = solver.evaluate_j(&rho.slices, 0, None)?;
    SpaceTimeField::new(rho.grid, rho.times, out.rho)
}
