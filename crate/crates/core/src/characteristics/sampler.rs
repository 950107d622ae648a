use num_complex::Complex64;
use rayon::prelude::*;

use crate::spacetime::{SpaceTimeField, TimeGrid, VectorSpaceTimeField};
use crate::spectral_field::{trig_eval, PeriodicGrid, ScalarField2D};

/// Spatial reconstruction between grid nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpatialInterp {
    /// Exact on band-limited fields; `O(N²)` per evaluation.
    Trigonometric,
    /// Periodic cubic B-spline interpolant; `O(1)` per evaluation.
    CubicSpline,
}

/// `E` and `∇_x E` at one point; `grad[i][j] = ∂_j E_i`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FieldSample {
    pub e: [f64; 2],
    pub grad: [[f64; 2]; 2],
}

/// Per-node data for one component: spectra or spline coefficients.
#[derive(Debug, Clone)]
enum NodeData {
    Spectral(Vec<Complex64>),
    Spline(Vec<f64>),
}

/// Continuous-in-(t, x) access to a sampled field `E(t, x)`: cubic Hermite
/// in time, trigonometric or spline in space.
#[derive(Debug, Clone)]
pub struct FieldSampler {
    pub grid: PeriodicGrid,
    pub times: TimeGrid,
    pub interp: SpatialInterp,
    values: Vec<[NodeData; 2]>,
    slopes: Vec<[NodeData; 2]>,
    /// Spline coefficients of both components per node, interleaved and
    /// padded by the stencil width so lookups need no wrap-around.
    padded: Vec<Vec<[f64; 2]>>,
}

fn pad_node(n: usize, data: &[NodeData; 2]) -> Vec<[f64; 2]> {
    let (NodeData::Spline(a), NodeData::Spline(b)) = (&data[0], &data[1]) else { return Vec::new() };
    let w = n + 3;
    let mut out = vec![[0.0; 2]; w * w];
    for i in 0..w {
        let si = (i + n - 1) % n;
        for j in 0..w {
            let sj = (j + n - 1) % n;
            out[i * w + j] = [a[si * n + sj], b[si * n + sj]];
        }
    }
    out
}

fn spline_prefilter(grid: &PeriodicGrid, spec: &[Complex64]) -> Vec<f64> {
    let n = grid.n;
    let b: Vec<f64> =
        (0..n).map(|k| (4.0 + 2.0 * (2.0 * std::f64::consts::PI * k as f64 / n as f64).cos()) / 6.0).collect();
    let filtered: Vec<Complex64> = spec.iter().enumerate().map(|(i, c)| c / (b[i / n] * b[i % n])).collect();
    ScalarField2D::from_spectrum(*grid, filtered).values
}

fn node_data(grid: &PeriodicGrid, spec: Vec<Complex64>, interp: SpatialInterp) -> NodeData {
    match interp {
        SpatialInterp::Trigonometric => NodeData::Spectral(spec),
        SpatialInterp::CubicSpline => NodeData::Spline(spline_prefilter(grid, &spec)),
    }
}

fn combine(parts: &[(f64, &NodeData)]) -> NodeData {
    match parts[0].1 {
        NodeData::Spectral(first) => {
            let mut out = vec![Complex64::new(0.0, 0.0); first.len()];
            for (w, d) in parts {
                if let NodeData::Spectral(s) = d {
                    out.iter_mut().zip(s).for_each(|(o, v)| *o += *w * v);
                }
            }
            NodeData::Spectral(out)
        }
        NodeData::Spline(first) => {
            let mut out = vec![0.0; first.len()];
            for (w, d) in parts {
                if let NodeData::Spline(s) = d {
                    out.iter_mut().zip(s).for_each(|(o, v)| *o += w * v);
                }
            }
            NodeData::Spline(out)
        }
    }
}

/// Cubic B-spline basis weights and their first two derivatives at offset `t ∈ [0,1)`.
fn bspline_weights(t: f64) -> [[f64; 4]; 3] {
    let s = 1.0 - t;
    let t2 = t * t;
    let t3 = t2 * t;
    [
        [s * s * s / 6.0, (3.0 * t3 - 6.0 * t2 + 4.0) / 6.0, (-3.0 * t3 + 3.0 * t2 + 3.0 * t + 1.0) / 6.0, t3 / 6.0],
        [-s * s / 2.0, (3.0 * t2 - 4.0 * t) / 2.0, (-3.0 * t2 + 2.0 * t + 1.0) / 2.0, t2 / 2.0],
        [s, 3.0 * t - 2.0, -3.0 * t + 1.0, t],
    ]
}

#[inline]
fn bspline_value_weights(t: f64) -> [f64; 4] {
    let s = 1.0 - t;
    let t2 = t * t;
    let t3 = t2 * t;
    [s * s * s / 6.0, (3.0 * t3 - 6.0 * t2 + 4.0) / 6.0, (-3.0 * t3 + 3.0 * t2 + 3.0 * t + 1.0) / 6.0, t3 / 6.0]
}

impl FieldSampler {
    pub fn from_vector_field(field: &VectorSpaceTimeField, interp: SpatialInterp) -> Self {
        let grid = field.grid;
        let spectra: Vec<[Vec<Complex64>; 2]> = field
            .slices
            .iter()
            .map(|s| [s.components[0].spectrum().to_vec(), s.components[1].spectrum().to_vec()])
            .collect();
        Self::from_spectra(grid, field.times, spectra, interp)
    }

    /// Sampler for `E = -∇(-Δ+1)^{-1} g`.
    pub fn from_density(g: &SpaceTimeField, interp: SpatialInterp) -> Self {
        let grid = g.grid;
        let spectra: Vec<[Vec<Complex64>; 2]> = g
            .slices
            .par_iter()
            .map(|s| field_spectra_from_density(&grid, s.spectrum()))
            .collect();
        Self::from_spectra(grid, g.times, spectra, interp)
    }

    fn from_spectra(grid: PeriodicGrid, times: TimeGrid, spectra: Vec<[Vec<Complex64>; 2]>, interp: SpatialInterp) -> Self {
        let dt = times.dt();
        let nt = spectra.len();
        // node slopes by second-order differences
        let slope = |m: usize, c: usize| -> Vec<Complex64> {
            let s = |k: usize| &spectra[k][c];
            let (a, b, w) = if m == 0 {
                return s(0).iter().zip(s(1)).zip(s(2)).map(|((x0, x1), x2)| (-3.0 * x0 + 4.0 * x1 - x2) / (2.0 * dt)).collect();
            } else if m == nt - 1 {
                return s(m).iter().zip(s(m - 1)).zip(s(m - 2)).map(|((x0, x1), x2)| (3.0 * x0 - 4.0 * x1 + x2) / (2.0 * dt)).collect();
            } else {
                (s(m + 1), s(m - 1), 1.0 / (2.0 * dt))
            };
            a.iter().zip(b).map(|(x, y)| (x - y) * w).collect()
        };
        let slopes: Vec<[NodeData; 2]> = (0..nt)
            .into_par_iter()
            .map(|m| [node_data(&grid, slope(m, 0), interp), node_data(&grid, slope(m, 1), interp)])
            .collect();
        let values: Vec<[NodeData; 2]> = spectra
            .into_par_iter()
            .map(|[a, b]| [node_data(&grid, a, interp), node_data(&grid, b, interp)])
            .collect();
        let padded = match interp {
            SpatialInterp::CubicSpline => values.par_iter().map(|d| pad_node(grid.n, d)).collect(),
            SpatialInterp::Trigonometric => Vec::new(),
        };
        FieldSampler { grid, times, interp, values, slopes, padded }
    }

    /// Node index and Hermite weights `(h00, h10·dt, h01, h11·dt)` for time `tau`.
    fn time_weights(&self, tau: f64) -> (usize, [f64; 4]) {
        let dt = self.times.dt();
        let u = ((tau - self.times.start) / dt).clamp(0.0, self.times.steps as f64);
        let mut m = u.floor() as usize;
        if m >= self.times.steps {
            m = self.times.steps - 1;
        }
        let mut th = u - m as f64;
        // Snap round-off so that lattice times hit a single node.
        if th < 1e-10 {
            th = 0.0;
        } else if th > 1.0 - 1e-10 && m + 1 < self.times.steps {
            m += 1;
            th = 0.0;
        }
        let th2 = th * th;
        let th3 = th2 * th;
        (m, [2.0 * th3 - 3.0 * th2 + 1.0, (th3 - 2.0 * th2 + th) * dt, -2.0 * th3 + 3.0 * th2, (th3 - th2) * dt])
    }

    fn eval_component(&self, data: &[(f64, &NodeData)], x: [f64; 2], order: usize) -> [f64; 6] {
        // returns [f, f_x1, f_x2, f_x1x1, f_x1x2, f_x2x2] (only up to `order`)
        match data[0].1 {
            NodeData::Spectral(_) => {
                let NodeData::Spectral(spec) = combine(data) else { unreachable!() };
                let mut out = [0.0; 6];
                out[0] = trig_eval(self.grid, &spec, x, [0, 0]);
                if order >= 1 {
                    out[1] = trig_eval(self.grid, &spec, x, [1, 0]);
                    out[2] = trig_eval(self.grid, &spec, x, [0, 1]);
                }
                if order >= 2 {
                    out[3] = trig_eval(self.grid, &spec, x, [2, 0]);
                    out[4] = trig_eval(self.grid, &spec, x, [1, 1]);
                    out[5] = trig_eval(self.grid, &spec, x, [0, 2]);
                }
                out
            }
            NodeData::Spline(_) => self.eval_spline(data, x, order),
        }
    }

    fn eval_spline(&self, data: &[(f64, &NodeData)], x: [f64; 2], order: usize) -> [f64; 6] {
        let n = self.grid.n;
        let dx = self.grid.dx();
        let l = self.grid.half_length;
        let u = [(x[0] + l) / dx, (x[1] + l) / dx];
        let base = [u[0].floor(), u[1].floor()];
        let wa = bspline_weights(u[0] - base[0]);
        let wb = bspline_weights(u[1] - base[1]);
        let ia: [usize; 4] = std::array::from_fn(|k| (base[0] as i64 - 1 + k as i64).rem_euclid(n as i64) as usize);
        let ib: [usize; 4] = std::array::from_fn(|k| (base[1] as i64 - 1 + k as i64).rem_euclid(n as i64) as usize);
        let mut out = [0.0; 6];
        for a in 0..4 {
            let mut row = [0.0; 3];
            for b in 0..4 {
                let idx = ia[a] * n + ib[b];
                let mut c = 0.0;
                for (w, d) in data {
                    if let NodeData::Spline(s) = d {
                        c += w * s[idx];
                    }
                }
                row[0] += wb[0][b] * c;
                if order >= 1 {
                    row[1] += wb[1][b] * c;
                }
                if order >= 2 {
                    row[2] += wb[2][b] * c;
                }
            }
            out[0] += wa[0][a] * row[0];
            if order >= 1 {
                out[1] += wa[1][a] * row[0] / dx;
                out[2] += wa[0][a] * row[1] / dx;
            }
            if order >= 2 {
                out[3] += wa[2][a] * row[0] / (dx * dx);
                out[4] += wa[1][a] * row[1] / (dx * dx);
                out[5] += wa[0][a] * row[2] / (dx * dx);
            }
        }
        out
    }

    fn eval(&self, tau: f64, x: [f64; 2], order: usize) -> [[f64; 6]; 2] {
        let (m, h) = self.time_weights(tau);
        let mut out = [[0.0; 6]; 2];
        for (c, o) in out.iter_mut().enumerate() {
            let parts = [
                (h[0], &self.values[m][c]),
                (h[1], &self.slopes[m][c]),
                (h[2], &self.values[m + 1][c]),
                (h[3], &self.slopes[m + 1][c]),
            ];
            let used = if h[1] == 0.0 && h[2] == 0.0 && h[3] == 0.0 { 1 } else { 4 };
            *o = self.eval_component(&parts[..used], x, order);
        }
        out
    }

    /// Whether [`Self::field_at_node`] takes the padded spline path.
    pub fn has_node_fast_path(&self) -> bool {
        !self.padded.is_empty()
    }

    /// `E(t_m, x)` at time node `m`; same value as `field(t_m, x)`.
    #[inline]
    pub fn field_at_node(&self, m: usize, x: [f64; 2]) -> [f64; 2] {
        let Some(c) = self.padded.get(m) else {
            return self.field(self.times.node(m), x);
        };
        let n = self.grid.n;
        let dx = self.grid.dx();
        let l = self.grid.half_length;
        let u = [(x[0] + l) / dx, (x[1] + l) / dx];
        let f = [u[0].floor(), u[1].floor()];
        let wa = bspline_value_weights(u[0] - f[0]);
        let wb = bspline_value_weights(u[1] - f[1]);
        let i0 = (f[0] as i64).rem_euclid(n as i64) as usize;
        let j0 = (f[1] as i64).rem_euclid(n as i64) as usize;
        let w = n + 3;
        let mut out = [0.0; 2];
        for (a, wa) in wa.iter().enumerate() {
            let row = &c[(i0 + a) * w + j0..(i0 + a) * w + j0 + 4];
            let mut r = [0.0; 2];
            for (cb, wb) in row.iter().zip(wb) {
                r[0] += wb * cb[0];
                r[1] += wb * cb[1];
            }
            out[0] += wa * r[0];
            out[1] += wa * r[1];
        }
        out
    }

    pub fn field(&self, tau: f64, x: [f64; 2]) -> [f64; 2] {
        let v = self.eval(tau, x, 0);
        [v[0][0], v[1][0]]
    }

    pub fn sample(&self, tau: f64, x: [f64; 2]) -> FieldSample {
        let v = self.eval(tau, x, 1);
        FieldSample { e: [v[0][0], v[1][0]], grad: [[v[0][1], v[0][2]], [v[1][1], v[1][2]]] }
    }

    /// `hess[i][j][k] = ∂_j ∂_k E_i`.
    pub fn hessian(&self, tau: f64, x: [f64; 2]) -> [[[f64; 2]; 2]; 2] {
        let v = self.eval(tau, x, 2);
        let h = |c: usize| [[v[c][3], v[c][4]], [v[c][4], v[c][5]]];
        [h(0), h(1)]
    }

    /// Largest node value of `|E|` over the grid.
    pub fn sup_field(&self) -> f64 {
        let mut best: f64 = 0.0;
        for m in 0..self.times.len() {
            let t = self.times.node(m);
            for idx in 0..self.grid.len() {
                let e = self.field(t, self.grid.point(idx));
                best = best.max(e[0].hypot(e[1]));
            }
        }
        best
    }
}

/// Spectra of `E = -∇(-Δ+1)^{-1} g` from the spectrum of `g`.
pub fn field_spectra_from_density(grid: &PeriodicGrid, g: &[Complex64]) -> [Vec<Complex64>; 2] {
    let n = grid.n;
    let comp = |axis: usize| -> Vec<Complex64> {
        g.iter()
            .enumerate()
            .map(|(i, c)| {
                let bin = if axis == 0 { i / n } else { i % n };
                if grid.is_nyquist(bin) {
                    return Complex64::new(0.0, 0.0);
                }
                let xi = grid.xi(i);
                let m = 1.0 / (1.0 + xi[0] * xi[0] + xi[1] * xi[1]);
                c * Complex64::new(0.0, -grid.frequency(bin) * m)
            })
            .collect()
    };
    [comp(0), comp(1)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn band_limited(grid: PeriodicGrid, times: TimeGrid) -> SpaceTimeField {
        SpaceTimeField::from_fn(grid, times, |t, x| (1.0 + 0.3 * t) * (x[0].cos() + 0.5 * (x[1] + 2.0 * x[0]).sin()))
    }

    #[test]
    fn nodes_reproduced() {
        let grid = PeriodicGrid::new(PI, 16).unwrap();
        let times = TimeGrid::new(1.0, 4).unwrap();
        let g = band_limited(grid, times);
        let spectra = field_spectra_from_density(&grid, g.slices[2].spectrum());
        let e0 = ScalarField2D::from_spectrum(grid, spectra[0].clone());
        for interp in [SpatialInterp::Trigonometric, SpatialInterp::CubicSpline] {
            let s = FieldSampler::from_density(&g, interp);
            for idx in [0, 5, 77, 200] {
                let v = s.field(times.node(2), grid.point(idx));
                assert!((v[0] - e0.values[idx]).abs() < 1e-13, "{interp:?}");
            }
        }
    }

    #[test]
    fn gradient_consistent_with_values() {
        let grid = PeriodicGrid::new(PI, 16).unwrap();
        let times = TimeGrid::new(1.0, 4).unwrap();
        let g = band_limited(grid, times);
        for interp in [SpatialInterp::Trigonometric, SpatialInterp::CubicSpline] {
            let s = FieldSampler::from_density(&g, interp);
            let (t, x) = (0.37, [0.41, -1.3]);
            let smp = s.sample(t, x);
            let h = 1e-5;
            for j in 0..2 {
                let mut xp = x;
                let mut xm = x;
                xp[j] += h;
                xm[j] -= h;
                let (ep, em) = (s.field(t, xp), s.field(t, xm));
                for i in 0..2 {
                    let fd = (ep[i] - em[i]) / (2.0 * h);
                    assert!((fd - smp.grad[i][j]).abs() < 1e-8, "{interp:?} {i}{j}");
                }
            }
            let hs = s.hessian(t, x);
            let gp = s.sample(t, [x[0] + h, x[1]]).grad;
            let gm = s.sample(t, [x[0] - h, x[1]]).grad;
            assert!(((gp[1][1] - gm[1][1]) / (2.0 * h) - hs[1][1][0]).abs() < 1e-6);
        }
    }

    #[test]
    fn trigonometric_is_exact_off_grid() {
        let grid = PeriodicGrid::new(PI, 16).unwrap();
        let times = TimeGrid::new(1.0, 4).unwrap();
        // g = cos(x1) ⇒ E = (sin(x1)/2, 0), constant in time
        let g = SpaceTimeField::from_fn(grid, times, |_, x| x[0].cos());
        let s = FieldSampler::from_density(&g, SpatialInterp::Trigonometric);
        let e = s.field(0.61, [0.3, 2.0]);
        assert!((e[0] - 0.3f64.sin() / 2.0).abs() < 1e-13 && e[1].abs() < 1e-13);
        let sp = FieldSampler::from_density(&g, SpatialInterp::CubicSpline);
        assert!((sp.field(0.61, [0.3, 2.0])[0] - 0.3f64.sin() / 2.0).abs() < 1e-3);
    }
}
