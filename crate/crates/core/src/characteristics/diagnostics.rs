use std::io::Write;

use rayon::prelude::*;

use super::{trace, FieldSampler, FlowConfig};
use crate::error::Result;
use crate::norms::{NormReport, ShiftSet};

/// The seven weighted quantities at one `(s, t)`; sups over the sample points.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DiagnosticRow {
    pub s: f64,
    pub t: f64,
    pub w_y: f64,
    pub w_grad_x_y: f64,
    pub w_grad_v_y: f64,
    pub w_w: f64,
    pub w_grad_v_w: f64,
    pub w_holder_grad_v_w: f64,
    pub holder_grad_v_y: f64,
}

pub const DIAGNOSTIC_NAMES: [&str; 7] =
    ["wY", "wGradxY", "wGradvY", "wW", "wGradvW", "wHolderGradvW", "holderGradvY"];

impl DiagnosticRow {
    pub fn values(&self) -> [f64; 7] {
        [
            self.w_y,
            self.w_grad_x_y,
            self.w_grad_v_y,
            self.w_w,
            self.w_grad_v_w,
            self.w_holder_grad_v_w,
            self.holder_grad_v_y,
        ]
    }

    fn from_values(s: f64, t: f64, v: [f64; 7]) -> Self {
        DiagnosticRow {
            s,
            t,
            w_y: v[0],
            w_grad_x_y: v[1],
            w_grad_v_y: v[2],
            w_w: v[3],
            w_grad_v_w: v[4],
            w_holder_grad_v_w: v[5],
            holder_grad_v_y: v[6],
        }
    }
}

#[derive(Debug, Clone)]
pub struct FlowDiagnostics {
    pub rows: Vec<DiagnosticRow>,
    pub a: f64,
    pub shifts: ShiftSet,
}

impl FlowDiagnostics {
    /// Each quantity maximized over the `(s, t)` sample set.
    pub fn maxima(&self) -> [f64; 7] {
        let mut m = [0.0f64; 7];
        for r in &self.rows {
            for (mi, v) in m.iter_mut().zip(r.values()) {
                *mi = mi.max(v);
            }
        }
        m
    }

    /// Maxima divided by `‖𝔤‖_{1+a,T}`.
    pub fn ratios(&self, g_norm: f64) -> [f64; 7] {
        self.maxima().map(|v| v / g_norm)
    }

    pub fn report(&self) -> NormReport {
        let comps = DIAGNOSTIC_NAMES.iter().zip(self.maxima()).map(|(n, v)| (n.to_string(), v)).collect();
        NormReport::new(comps, self.a).with_shifts(self.shifts.clone())
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# landau-lab v1")?;
        writeln!(w, "s,t,{}", DIAGNOSTIC_NAMES.join(","))?;
        for r in &self.rows {
            let v = r.values();
            writeln!(w, "{},{},{},{},{},{},{},{},{}", r.s, r.t, v[0], v[1], v[2], v[3], v[4], v[5], v[6])?;
        }
        Ok(())
    }
}

/// Geometric ladder `{0, 0.5, 1, 2, 4, …}` strictly below `t`.
pub fn geometric_ladder(t: f64) -> Vec<f64> {
    let mut out = vec![0.0];
    let mut s = 0.5;
    while s < t {
        out.push(s);
        s *= 2.0;
    }
    out
}

fn japanese(s: f64) -> f64 {
    (1.0 + s * s).sqrt()
}

/// Weighted sup-norms of `Y`, `W` and their derivatives, plus Hölder
/// quotients in `v` over `shifts`, for every `s` in `ladder` (with `t` fixed).
pub fn flow_diagnostics(
    sampler: &FieldSampler,
    t: f64,
    ladder: &[f64],
    points: &[([f64; 2], [f64; 2])],
    shifts: &ShiftSet,
    a: f64,
    cfg: &FlowConfig,
) -> Result<FlowDiagnostics> {
    let cfg = FlowConfig { jacobians: true, ..*cfg };
    let s_min = ladder.iter().cloned().fold(t, f64::min);
    let dt = sampler.times.dt();
    let alphas = shifts.shifts();
    let per_point: Vec<Vec<[f64; 7]>> = points
        .par_iter()
        .map(|&(xs, v)| {
            let base = trace(sampler, s_min, t, xs, v, &cfg)?;
            let mut out: Vec<[f64; 7]> = ladder
                .iter()
                .map(|&s| {
                    let p = base.at(s, dt);
                    let js = japanese(s);
                    [
                        js * p.y.norm(),
                        js.powf(1.0 + a) * p.dxy.norm(),
                        js.powf(a) * p.dvy.norm(),
                        js * js * p.w.norm(),
                        js.powf(1.0 + a) * p.dvw.norm(),
                        0.0,
                        0.0,
                    ]
                })
                .collect();
            for al in &alphas {
                let shifted = trace(sampler, s_min, t, xs, [v[0] - al[0], v[1] - al[1]], &cfg)?;
                let scale = (al[0].hypot(al[1])).powf(-a);
                for (row, &s) in out.iter_mut().zip(ladder) {
                    let (p, q) = (base.at(s, dt), shifted.at(s, dt));
                    row[5] = row[5].max(japanese(s) * scale * (p.dvw - q.dvw).norm());
                    row[6] = row[6].max(scale * (p.dvy - q.dvy).norm());
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let rows = ladder
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let mut v = [0.0f64; 7];
            for pp in &per_point {
                for (vi, x) in v.iter_mut().zip(pp[i]) {
                    *vi = vi.max(x);
                }
            }
            DiagnosticRow::from_values(s, t, v)
        })
        .collect();
    Ok(FlowDiagnostics { rows, a, shifts: shifts.clone() })
}
