use std::f64::consts::PI;

use super::*;
use crate::characteristics::{FieldSampler, SpatialInterp};
use crate::equilibria::EquilibriumProfile;
use crate::error::Error;
use crate::spacetime::{SpaceTimeField, TimeGrid, VelocityGrid};
use crate::spectral_field::{NonlinearityA, PeriodicGrid};

fn small_grids() -> (PeriodicGrid, VelocityGrid) {
    (PeriodicGrid::new(2.0 * PI, 16).unwrap(), VelocityGrid::new(16, 8.0).unwrap())
}

fn zero_flows(grid: PeriodicGrid, times: TimeGrid) -> FieldSampler {
    FieldSampler::from_density(&SpaceTimeField::zeros(grid, times), SpatialInterp::CubicSpline)
}

fn wavy_flows(grid: PeriodicGrid, times: TimeGrid, amp: f64) -> FieldSampler {
    let g = SpaceTimeField::from_fn(grid, times, |t, x| {
        amp * ((0.5 * x[0]).cos() + 0.3 * (0.5 * x[1] - 0.2 * t).sin()) * (-0.1 * t).exp()
    });
    FieldSampler::from_density(&g, SpatialInterp::CubicSpline)
}

#[test]
fn transported_initial_without_field_is_free_transport() {
    let (grid, vg) = small_grids();
    let times = TimeGrid::new(2.0, 4).unwrap();
    let f0 = InitialData::gaussian(1e-3, 1.0, 1.0).unwrap();
    let quad = PhaseQuadrature::new(grid, vg);
    let flows = zero_flows(grid, times);
    let rho = transported_initial(&f0, &flows, &quad, 3).unwrap();
    let free = f0.free_density(grid, times.node(3));
    assert_eq!(rho.values, free.values);
    let rho0 = transported_initial(&f0, &wavy_flows(grid, times, 0.01), &quad, 0).unwrap();
    assert_eq!(rho0.values, f0.free_density(grid, 0.0).values);
}

#[test]
fn t_operator_vanishes_without_flow_or_forcing() {
    let (grid, vg) = small_grids();
    let times = TimeGrid::new(1.0, 4).unwrap();
    let quad = PhaseQuadrature::new(grid, vg);
    let eta = |v: [f64; 2]| {
        let g = (-(v[0] * v[0] + v[1] * v[1]) / 2.0).exp() / 20.0;
        [g, -g]
    };
    let forcing = wavy_flows(grid, times, 0.01);
    let t = t_operator(&forcing, &eta, &zero_flows(grid, times), &quad).unwrap();
    assert_eq!(t.sup_norm(), 0.0);
    let t = t_operator(&zero_flows(grid, times), &eta, &forcing, &quad).unwrap();
    assert_eq!(t.sup_norm(), 0.0);
    let t = t_operator(&forcing, &eta, &forcing, &quad).unwrap();
    assert!(t.sup_norm() > 0.0);
}

#[test]
fn heavy_eta_is_rejected() {
    let (grid, vg) = small_grids();
    let times = TimeGrid::new(1.0, 2).unwrap();
    let quad = PhaseQuadrature::new(grid, vg);
    let eta = |v: [f64; 2]| [(-(v[0] * v[0] + v[1] * v[1]) / 2.0).exp() * 5.0, 0.0];
    let flows = zero_flows(grid, times);
    let e = t_operator(&flows, &eta, &flows, &quad).unwrap_err();
    assert!(matches!(e, Error::EtaWeightViolation(_)));
}

#[test]
fn reaction_is_quadratic_in_field() {
    let (grid, vg) = small_grids();
    let times = TimeGrid::new(1.0, 4).unwrap();
    let quad = PhaseQuadrature::new(grid, vg);
    let mu = EquilibriumProfile::maxwellian();
    let (r1, factor) = reaction(&wavy_flows(grid, times, 1e-2), &mu, &quad).unwrap();
    let (r2, _) = reaction(&wavy_flows(grid, times, 5e-3), &mu, &quad).unwrap();
    assert!(factor >= 1.0);
    let ratio = r1.sup_norm() / r2.sup_norm();
    assert!((ratio - 4.0).abs() < 0.1, "{ratio}");
}

#[test]
fn reconstruction_limits() {
    let (grid, vg) = small_grids();
    let times = TimeGrid::new(1.0, 4).unwrap();
    let f0 = InitialData::gaussian(1e-3, 1.0, 1.0).unwrap();
    let mu = EquilibriumProfile::maxwellian();
    let at0 = reconstruct_f(&wavy_flows(grid, times, 0.01), &f0, &mu, vg, 0).unwrap();
    let free = reconstruct_f(&zero_flows(grid, times), &f0, &mu, vg, 4).unwrap();
    let vs = vg.nodes();
    for ix in [0, 37, 200] {
        let x = grid.point(ix);
        for (iv, v) in vs.iter().enumerate() {
            let k = ix * vs.len() + iv;
            assert!((at0.values[k] - f0.value_periodic(&grid, x, *v)).abs() < 1e-18);
            let expect = f0.value_periodic(&grid, [x[0] - v[0], x[1] - v[1]], *v);
            assert!((free.values[k] - expect).abs() < 1e-18);
        }
    }
    let full = reconstruct_f(&wavy_flows(grid, times, 0.01), &f0, &mu, vg, 4).unwrap();
    for (k, val) in full.values.iter().enumerate() {
        let v = vs[k % vs.len()];
        assert!(val + mu.eval_mu(v).unwrap() >= 0.0);
    }
}

#[test]
fn scattering_of_zero_field_is_initial_data() {
    let (grid, vg) = small_grids();
    let times = TimeGrid::new(2.0, 8).unwrap();
    let f0 = InitialData::gaussian(1e-3, 1.0, 1.0).unwrap();
    let mu = EquilibriumProfile::maxwellian();
    let sp = scattering_profile(&zero_flows(grid, times), &f0, &mu, vg, 0.5).unwrap();
    assert_eq!(sp.y_inf_sup + sp.w_inf_sup, 0.0);
    assert!(sp.decay.iter().all(|d| d.1 == 0.0));
    assert_eq!(sp.decay.len(), 2);
    let vs = vg.nodes();
    for (k, val) in sp.f_inf.values.iter().enumerate() {
        let (ix, iv) = (k / vs.len(), k % vs.len());
        assert_eq!(*val, f0.value_periodic(&grid, grid.point(ix), vs[iv]));
    }
}

fn solver_config(dt: f64, slab: f64, horizon: f64) -> SolverConfig {
    let (grid, vg) = small_grids();
    SolverConfig::new(grid, vg, dt, slab, horizon).unwrap()
}

#[test]
fn zero_data_stays_zero() {
    let mu = EquilibriumProfile::maxwellian();
    let solver = DensitySolver::new(solver_config(0.25, 0.5, 1.5), InitialData::zero(), &mu, NonlinearityA::massless_electron()).unwrap();
    let sol = solver.continuation().unwrap();
    assert_eq!(sol.state.status, BootstrapStatus::Converged);
    assert_eq!(sol.rho.sup_norm(), 0.0);
    assert_eq!(sol.ledger_total(), 0.0);
    assert!((sol.state.horizon - 1.5).abs() < 1e-12);
}

#[test]
fn local_solve_matches_oracle() {
    let mu = EquilibriumProfile::maxwellian();
    let f0 = InitialData::gaussian(1e-3, 1.0, 1.0).unwrap();
    let a = NonlinearityA::massless_electron();
    // σ = 1 data needs the finer spatial grid to be spectrally resolved.
    let mut cfg = solver_config(0.05, 0.5, 0.5);
    cfg.x_grid = PeriodicGrid::new(2.0 * PI, 32).unwrap();
    let solver = DensitySolver::new(cfg.clone(), f0, &mu, a.clone()).unwrap();
    let sol = solver.local_solve().unwrap();
    assert!(sol.slabs[0].updates.len() <= 8, "{:?}", sol.slabs[0].updates);
    let oracle = SemiLagrangian {
        x_grid: cfg.x_grid,
        v_grid: cfg.v_grid,
        profile: &mu,
        nonlinearity: a,
        semilinear: cfg.semilinear,
        substeps: 4,
    };
    let run = oracle.run(&f0, sol.rho.times).unwrap();
    assert!(run.mass_drift() < 1e-10, "{}", run.mass_drift());
    let scale = run.rho.sup_norm();
    let diff = sol.rho.sub(&run.rho).unwrap().sup_norm() / scale;
    assert!(diff < 1e-4, "{diff}");
    // ∫ f dv from the reconstruction reproduces the fixed-point density.
    let flows = sol.flows();
    let snap = reconstruct_f(&flows, &f0, &mu, cfg.v_grid, 10).unwrap();
    let q = velocity_integral(&snap).unwrap();
    let err = q.iter().zip(&sol.rho.slices[10].values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err / scale < 1e-4, "{}", err / scale);
}

#[test]
fn large_data_breaches_cleanly() {
    let mu = EquilibriumProfile::maxwellian();
    let f0 = InitialData::gaussian(0.5, 1.0, 1.0).unwrap();
    let solver = DensitySolver::new(solver_config(0.25, 0.5, 1.0), f0, &mu, NonlinearityA::massless_electron()).unwrap();
    let sol = solver.continuation().unwrap();
    assert_eq!(sol.state.status.label(), "threshold-breach");
    assert!(solver.local_solve().is_err());
}
