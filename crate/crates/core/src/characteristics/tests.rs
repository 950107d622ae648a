use std::f64::consts::PI;

use super::*;
use crate::spacetime::{SpaceTimeField, TimeGrid, VectorSpaceTimeField};
use crate::spectral_field::{PeriodicGrid, ScalarField2D, VectorField2D};

fn constant_field(e: [f64; 2], times: TimeGrid) -> FieldSampler {
    let grid = PeriodicGrid::new(PI, 8).unwrap();
    let c = |v: f64| ScalarField2D::from_fn(grid, |_| v);
    let slices = vec![VectorField2D { components: [c(e[0]), c(e[1])] }; times.len()];
    FieldSampler::from_vector_field(&VectorSpaceTimeField { grid, times, slices }, SpatialInterp::CubicSpline)
}

fn smooth_sampler(amp: f64, times: TimeGrid, interp: SpatialInterp) -> FieldSampler {
    let grid = PeriodicGrid::new(PI, 16).unwrap();
    let g = SpaceTimeField::from_fn(grid, times, |t, x| {
        amp * (x[0].cos() * (x[1]).cos() + 0.5 * (x[0] - 2.0 * x[1] + 0.3 * t).sin())
    });
    FieldSampler::from_density(&g, interp)
}

#[test]
fn zero_field_gives_zero_flow() {
    let s = constant_field([0.0, 0.0], TimeGrid::new(2.0, 8).unwrap());
    let tr = trace(&s, 0.0, 2.0, [0.3, 0.1], [1.0, -0.5], &FlowConfig::default()).unwrap();
    assert!(tr.points.iter().all(|p| *p == FlowPoint::default()));
    let inv = invert_flow(&s, 0.5, 2.0, &[([0.2, 0.4], [0.7, 0.1])], &FlowConfig::default(), 1e-12).unwrap();
    assert_eq!(inv.psi[0], [0.7, 0.1]);
}

#[test]
fn constant_field_closed_form() {
    let e = [0.02, -0.01];
    let times = TimeGrid::new(3.0, 12).unwrap();
    let s = constant_field(e, times);
    for method in [FlowMethod::Marching, FlowMethod::Picard] {
        let cfg = FlowConfig { method, ..FlowConfig::default() };
        let tr = trace(&s, 0.0, 3.0, [0.5, -0.2], [0.3, 0.9], &cfg).unwrap();
        for (k, p) in tr.points.iter().enumerate() {
            let lag = 3.0 - k as f64 * times.dt();
            for i in 0..2 {
                assert!((p.y[i] - e[i] * lag * lag / 2.0).abs() < 1e-14);
                assert!((p.w[i] + e[i] * lag).abs() < 1e-14);
            }
        }
        assert_eq!(tr.points.last().unwrap().y, V2::zeros());
    }
    let pts = [([0.1, 0.2], [0.5, -0.4]), ([-1.0, 2.0], [0.0, 1.5])];
    let inv = invert_flow(&s, 1.0, 3.0, &pts, &FlowConfig::default(), 1e-12).unwrap();
    for (psi, (_, v)) in inv.psi.iter().zip(&pts) {
        for i in 0..2 {
            assert!((psi[i] - (v[i] + e[i] * 2.0 / 2.0)).abs() < 1e-12);
        }
    }
}

#[test]
fn picard_and_marching_agree() {
    let times = TimeGrid::new(4.0, 40).unwrap();
    let s = smooth_sampler(0.05, times, SpatialInterp::CubicSpline);
    let pic = FlowConfig { method: FlowMethod::Picard, tol: 1e-14, ..FlowConfig::default() };
    let a = trace(&s, 0.0, 4.0, [0.4, -0.7], [1.2, 0.3], &pic).unwrap();
    let b = trace(&s, 0.0, 4.0, [0.4, -0.7], [1.2, 0.3], &FlowConfig::default()).unwrap();
    assert!(a.iterations > 2 && a.residual < 1e-13);
    for (p, q) in a.points.iter().zip(&b.points) {
        assert!((p.y - q.y).amax() < 1e-12 && (p.w - q.w).amax() < 1e-12);
        assert!((p.dvy - q.dvy).amax() < 1e-11 && (p.dxw - q.dxw).amax() < 1e-11);
    }
}

#[test]
fn picard_diverges_on_strong_field() {
    let times = TimeGrid::new(10.0, 100).unwrap();
    let s = smooth_sampler(4.0, times, SpatialInterp::CubicSpline);
    let cfg = FlowConfig { method: FlowMethod::Picard, max_iter: 30, ..FlowConfig::default() };
    let r = trace(&s, 0.0, 10.0, [0.1, 0.2], [0.5, 0.5], &cfg);
    assert!(matches!(r, Err(Error::PicardDivergence { .. })));
}

fn rk4_backward(s: &FieldSampler, t: f64, s0: f64, x: [f64; 2], v: [f64; 2], steps: usize) -> ([f64; 2], [f64; 2]) {
    // time-independent field: d/dτ (X, V) = (V, E(X)), integrated from τ = t down to s0
    let h = -(t - s0) / steps as f64;
    let f = |y: [f64; 4]| {
        let e = s.field(0.0, [y[0], y[1]]);
        [y[2], y[3], e[0], e[1]]
    };
    let mut y = [x[0], x[1], v[0], v[1]];
    for _ in 0..steps {
        let add = |a: [f64; 4], b: [f64; 4], c: f64| [a[0] + c * b[0], a[1] + c * b[1], a[2] + c * b[2], a[3] + c * b[3]];
        let k1 = f(y);
        let k2 = f(add(y, k1, h / 2.0));
        let k3 = f(add(y, k2, h / 2.0));
        let k4 = f(add(y, k3, h));
        for i in 0..4 {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    ([y[0], y[1]], [y[2], y[3]])
}

#[test]
fn time_independent_field_matches_runge_kutta() {
    let times = TimeGrid::new(2.0, 200).unwrap();
    let grid = PeriodicGrid::new(PI, 8).unwrap();
    let g = SpaceTimeField::from_fn(grid, times, |_, x| 0.05 * (x[0].cos() + (x[0] + x[1]).sin()));
    let s = FieldSampler::from_density(&g, SpatialInterp::Trigonometric);
    let cfg = FlowConfig { substeps: 4, jacobians: false, ..FlowConfig::default() };
    for (x, v) in [([0.3, -0.4], [0.8, 0.2]), ([2.0, 1.0], [-1.1, 0.6])] {
        let (xx, vv, _) = characteristic(&s, 0.0, 2.0, x, v, &cfg).unwrap();
        let (xr, vr) = rk4_backward(&s, 2.0, 0.0, x, v, 400);
        for i in 0..2 {
            assert!((xx[i] - xr[i]).abs() < 1e-6, "X {} vs {}", xx[i], xr[i]);
            assert!((vv[i] - vr[i]).abs() < 1e-6, "V {} vs {}", vv[i], vr[i]);
        }
    }
}

#[test]
fn jacobians_match_finite_differences_and_liouville() {
    let times = TimeGrid::new(4.0, 40).unwrap();
    let s = smooth_sampler(0.05, times, SpatialInterp::CubicSpline);
    let cfg = FlowConfig::default();
    let (xs, v) = ([0.4, -0.7], [1.2, 0.3]);
    let p = *trace(&s, 0.0, 4.0, xs, v, &cfg).unwrap().start();
    let h = 1e-6;
    for j in 0..2 {
        let bump = |a: [f64; 2], d: f64| {
            let mut b = a;
            b[j] += d;
            b
        };
        let yp = *trace(&s, 0.0, 4.0, bump(xs, h), v, &cfg).unwrap().start();
        let ym = *trace(&s, 0.0, 4.0, bump(xs, -h), v, &cfg).unwrap().start();
        let vp = *trace(&s, 0.0, 4.0, xs, bump(v, h), &cfg).unwrap().start();
        let vm = *trace(&s, 0.0, 4.0, xs, bump(v, -h), &cfg).unwrap().start();
        for i in 0..2 {
            assert!(((yp.y[i] - ym.y[i]) / (2.0 * h) - p.dxy[(i, j)]).abs() < 1e-5);
            assert!(((vp.y[i] - vm.y[i]) / (2.0 * h) - p.dvy[(i, j)]).abs() < 1e-5);
            assert!(((yp.w[i] - ym.w[i]) / (2.0 * h) - p.dxw[(i, j)]).abs() < 1e-5);
            assert!(((vp.w[i] - vm.w[i]) / (2.0 * h) - p.dvw[(i, j)]).abs() < 1e-5);
        }
    }
    let det = liouville_determinant(&p, 0.0, 4.0);
    assert!((det - 1.0).abs() < 1e-5, "det {det}");
}

#[test]
fn composition_consistency() {
    let times = TimeGrid::new(4.0, 40).unwrap();
    let s = smooth_sampler(0.05, times, SpatialInterp::CubicSpline);
    let cfg = FlowConfig { substeps: 8, jacobians: false, ..FlowConfig::default() };
    let (x, v) = ([0.4, -0.7], [1.2, 0.3]);
    let (xd, vd, _) = characteristic(&s, 1.0, 4.0, x, v, &cfg).unwrap();
    let (xm, vm, _) = characteristic(&s, 2.5, 4.0, x, v, &cfg).unwrap();
    let (xc, vc, _) = characteristic(&s, 1.0, 2.5, xm, vm, &cfg).unwrap();
    for i in 0..2 {
        assert!((xd[i] - xc[i]).abs() < 1e-6 && (vd[i] - vc[i]).abs() < 1e-6);
    }
}

#[test]
fn inverse_defect_small_on_random_points() {
    use rand::{Rng, SeedableRng};
    let times = TimeGrid::new(4.0, 20).unwrap();
    let s = smooth_sampler(0.02, times, SpatialInterp::CubicSpline);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let pts: Vec<_> = (0..200)
        .map(|_| ([rng.gen_range(-PI..PI), rng.gen_range(-PI..PI)], [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)]))
        .collect();
    let inv = invert_flow(&s, 1.0, 4.0, &pts, &FlowConfig::default(), 1e-10).unwrap();
    assert!(inv.max_defect < 1e-10);
}

#[test]
fn diagnostics_scale_linearly() {
    let times = TimeGrid::new(4.0, 16).unwrap();
    let shifts = crate::norms::ShiftSet::new(1.0, 3).unwrap();
    let pts = [([0.3, 0.2], [0.5, -0.2]), ([-1.0, 1.5], [1.0, 0.4])];
    let run = |amp: f64| {
        let s = smooth_sampler(amp, times, SpatialInterp::CubicSpline);
        flow_diagnostics(&s, 4.0, &geometric_ladder(4.0), &pts, &shifts, 0.5, &FlowConfig::default()).unwrap()
    };
    let zero = run(0.0);
    assert!(zero.maxima().iter().all(|&v| v == 0.0));
    let (a, b) = (run(1e-3).maxima(), run(5e-4).maxima());
    for i in 0..7 {
        let r = a[i] / b[i];
        assert!((r - 2.0).abs() < 0.2, "{} ratio {r}", DIAGNOSTIC_NAMES[i]);
    }
}

#[test]
fn visitor_march_matches_trace() {
    let times = TimeGrid::new(2.0, 16).unwrap();
    let s = smooth_sampler(0.05, times, SpatialInterp::CubicSpline);
    let cfg = FlowConfig { jacobians: false, ..FlowConfig::default() };
    let (xs, v) = ([0.4, -1.1], [0.8, 0.3]);
    let tr = trace(&s, 0.5, 2.0, xs, v, &cfg).unwrap();
    let mut seen = 0;
    march_with(&s, 0.5, 2.0, xs, v, |k, tau, y, w, e| {
        let p = &tr.points[k];
        assert!((y[0] - p.y[0]).abs() + (y[1] - p.y[1]).abs() < 1e-15);
        assert!((w[0] - p.w[0]).abs() + (w[1] - p.w[1]).abs() < 1e-15);
        let direct = s.field(tau, [xs[0] + tau * v[0] + y[0], xs[1] + tau * v[1] + y[1]]);
        assert_eq!(direct, e);
        seen += 1;
    })
    .unwrap();
    assert_eq!(seen, tr.points.len());
}

#[test]
fn node_fast_path_matches_general_evaluation() {
    let times = TimeGrid::new(2.0, 4).unwrap();
    let s = smooth_sampler(0.3, times, SpatialInterp::CubicSpline);
    for m in 0..=4 {
        for &x in &[[0.1, -2.9], [3.1, 3.14], [-7.0, 11.5], [0.0, 0.0]] {
            let a = s.field_at_node(m, x);
            let b = s.field(times.node(m), x);
            assert!((a[0] - b[0]).abs() < 1e-14 && (a[1] - b[1]).abs() < 1e-14, "{a:?} {b:?}");
        }
    }
}
