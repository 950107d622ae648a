//! Homogeneous equilibria `μ(v)`, their Fourier data and the Penrose
//! stability margin.
//!
//! Fourier convention, used everywhere in this crate:
//! `ĥ(η) = ∫ h(v) e^{-i v·η} dv` (non-unitary, angular frequency). With it,
//! `(∇_v μ)^(η) = iη μ̂(η)` and the time-domain response kernel is
//! `K(t,ξ) = -t|ξ|² μ̂(tξ) / (1+|ξ|²)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quadrature::{bessel_j0, filon, gauss_kronrod};

/// Velocity (or frequency) two-vector.
pub type Vec2 = [f64; 2];

#[inline]
pub(crate) fn norm2(v: Vec2) -> f64 {
    v[0].hypot(v[1])
}

/// Radial profile given on knots, interpolated by a clamped cubic spline.
#[derive(Debug, Clone)]
pub struct RadialTable {
    knots: Vec<f64>,
    values: Vec<f64>,
    second: Vec<f64>,
    /// Exponential tail rate beyond the last knot; `None` means no tail model.
    tail_rate: Option<f64>,
}

impl RadialTable {
    /// Builds the table; `with_tail` fits `m(r) = m_last e^{-λ(r - r_last)}`
    /// from the last two knots.
    pub fn new(knots: Vec<f64>, values: Vec<f64>, with_tail: bool) -> Result<Self> {
        let n = knots.len();
        if n < 4 || values.len() != n {
            return Err(Error::InvalidProfile("table needs at least 4 knots and matching values".into()));
        }
        if knots[0] != 0.0 || knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidProfile("knots must start at 0 and increase strictly".into()));
        }
        if values.iter().any(|&m| m < 0.0 || !m.is_finite()) {
            return Err(Error::InvalidProfile("profile values must be finite and nonnegative".into()));
        }
        let tail_rate = if with_tail {
            let (r1, r2) = (knots[n - 2], knots[n - 1]);
            let (m1, m2) = (values[n - 2], values[n - 1]);
            let rate = if m1 > 0.0 && m2 > 0.0 && m2 < m1 { (m1 / m2).ln() / (r2 - r1) } else { 1.0 };
            Some(rate.max(1e-3))
        } else {
            None
        };
        // Clamped spline: m'(0) = 0 by radial smoothness, end slope matches the tail.
        let end_slope = match tail_rate {
            Some(rate) => -rate * values[n - 1],
            None => {
                let h = knots[n - 1] - knots[n - 2];
                (values[n - 1] - values[n - 2]) / h
            }
        };
        let second = clamped_spline_second_derivatives(&knots, &values, 0.0, end_slope);
        Ok(RadialTable { knots, values, second, tail_rate })
    }

    /// Two-column text, `radius value` per line; `#` starts a comment.
    pub fn parse(text: &str, with_tail: bool) -> Result<Self> {
        let mut knots = Vec::new();
        let mut values = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut cols = line.split(|c: char| c.is_whitespace() || c == ',').filter(|s| !s.is_empty());
            let parse = |s: Option<&str>| -> Result<f64> {
                s.and_then(|s| s.parse().ok())
                    .ok_or_else(|| Error::InvalidProfile(format!("line {}: expected two numbers", lineno + 1)))
            };
            knots.push(parse(cols.next())?);
            values.push(parse(cols.next())?);
        }
        RadialTable::new(knots, values, with_tail)
    }

    pub fn last_knot(&self) -> f64 {
        *self.knots.last().unwrap()
    }

    pub fn eval(&self, r: f64) -> Result<f64> {
        let last = self.last_knot();
        if r > last {
            return match self.tail_rate {
                Some(rate) => Ok(self.values[self.values.len() - 1] * (-rate * (r - last)).exp()),
                None => Err(Error::ProfileOutOfRange { radius: r, last_knot: last }),
            };
        }
        let i = match self.knots.binary_search_by(|k| k.partial_cmp(&r).unwrap()) {
            Ok(i) => i.min(self.knots.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.knots.len() - 2),
        };
        let h = self.knots[i + 1] - self.knots[i];
        let a = (self.knots[i + 1] - r) / h;
        let b = 1.0 - a;
        let value = a * self.values[i]
            + b * self.values[i + 1]
            + ((a * a * a - a) * self.second[i] + (b * b * b - b) * self.second[i + 1]) * h * h / 6.0;
        Ok(value.max(0.0))
    }
}

fn clamped_spline_second_derivatives(x: &[f64], y: &[f64], d0: f64, dn: f64) -> Vec<f64> {
    let n = x.len();
    let mut y2 = vec![0.0; n];
    let mut u = vec![0.0; n];
    y2[0] = -0.5;
    u[0] = (3.0 / (x[1] - x[0])) * ((y[1] - y[0]) / (x[1] - x[0]) - d0);
    for i in 1..n - 1 {
        let sig = (x[i] - x[i - 1]) / (x[i + 1] - x[i - 1]);
        let p = sig * y2[i - 1] + 2.0;
        y2[i] = (sig - 1.0) / p;
        let slope = (y[i + 1] - y[i]) / (x[i + 1] - x[i]) - (y[i] - y[i - 1]) / (x[i] - x[i - 1]);
        u[i] = (6.0 * slope / (x[i + 1] - x[i - 1]) - sig * u[i - 1]) / p;
    }
    let h = x[n - 1] - x[n - 2];
    let qn = 0.5;
    let un = (3.0 / h) * (dn - (y[n - 1] - y[n - 2]) / h);
    y2[n - 1] = (un - qn * u[n - 2]) / (qn * y2[n - 2] + 1.0);
    for k in (0..n - 1).rev() {
        y2[k] = y2[k] * y2[k + 1] + u[k];
    }
    y2
}

/// Shape of the equilibrium.
#[derive(Debug, Clone)]
pub enum ProfileKind {
    /// `(2πσ²)^{-1} e^{-|v|²/(2σ²)}`.
    Maxwellian { width: f64 },
    /// `½[M_σ(v - u0) + M_σ(v + u0)]`; not radial.
    TwoBump { offset: Vec2, width: f64 },
    /// Radial profile `m(|v|)` from a table.
    Tabulated(RadialTable),
}

/// Background distribution `μ(v)`.
#[derive(Debug, Clone)]
pub struct EquilibriumProfile {
    pub kind: ProfileKind,
    /// Total mass `∫ μ dv`, measured at construction.
    pub normalization: f64,
    /// Truncation radius for velocity quadratures.
    pub v_max: f64,
    /// Exponent `p₀` with `m(r) ≤ C⟨r⟩^{-p₀}`.
    pub decay_order: u32,
}

impl EquilibriumProfile {
    pub fn maxwellian() -> Self {
        Self::maxwellian_with_width(1.0)
    }

    pub fn maxwellian_with_width(width: f64) -> Self {
        EquilibriumProfile {
            kind: ProfileKind::Maxwellian { width },
            normalization: 1.0,
            v_max: 8.0 * width,
            decay_order: 64,
        }
    }

    pub fn two_bump(offset: Vec2, width: f64) -> Self {
        EquilibriumProfile {
            kind: ProfileKind::TwoBump { offset, width },
            normalization: 1.0,
            v_max: norm2(offset) + 8.0 * width,
            decay_order: 64,
        }
    }

    /// Wraps a radial table, checking the normalization `2π∫ m(r) r dr = 1`
    /// within 1e-8.
    pub fn tabulated(table: RadialTable, v_max: f64, decay_order: u32) -> Result<Self> {
        if decay_order < 7 {
            return Err(Error::InvalidProfile(format!("decay_order {decay_order} < 7")));
        }
        let mass = radial_mass(&table, v_max)?;
        if (mass - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidProfile(format!("normalization {mass:.12} differs from 1")));
        }
        let tail = table.eval(v_max).unwrap_or(0.0) * v_max * v_max;
        if tail > 1e-8 {
            return Err(Error::InvalidProfile(format!("v_max = {v_max} leaves tail mass ~{tail:.2e}")));
        }
        Ok(EquilibriumProfile { kind: ProfileKind::Tabulated(table), normalization: mass, v_max, decay_order })
    }

    pub fn is_radial(&self) -> bool {
        !matches!(self.kind, ProfileKind::TwoBump { .. })
    }

    /// `μ(v)`.
    pub fn eval_mu(&self, v: Vec2) -> Result<f64> {
        Ok(match &self.kind {
            ProfileKind::Maxwellian { width } => gaussian(v, *width),
            ProfileKind::TwoBump { offset, width } => {
                0.5 * (gaussian([v[0] - offset[0], v[1] - offset[1]], *width)
                    + gaussian([v[0] + offset[0], v[1] + offset[1]], *width))
            }
            ProfileKind::Tabulated(table) => table.eval(norm2(v))?,
        })
    }

    /// `∇_v μ(v)`; analytic for the built-in kinds, central differences for tables.
    pub fn grad_mu(&self, v: Vec2) -> Result<Vec2> {
        Ok(match &self.kind {
            ProfileKind::Maxwellian { width } => {
                let g = gaussian(v, *width) / (width * width);
                [-v[0] * g, -v[1] * g]
            }
            ProfileKind::TwoBump { offset, width } => {
                let s2 = width * width;
                let a = [v[0] - offset[0], v[1] - offset[1]];
                let b = [v[0] + offset[0], v[1] + offset[1]];
                let ga = gaussian(a, *width) / s2;
                let gb = gaussian(b, *width) / s2;
                [-0.5 * (a[0] * ga + b[0] * gb), -0.5 * (a[1] * ga + b[1] * gb)]
            }
            ProfileKind::Tabulated(_) => {
                let h = 1e-5;
                let dx = (self.eval_mu([v[0] + h, v[1]])? - self.eval_mu([v[0] - h, v[1]])?) / (2.0 * h);
                let dy = (self.eval_mu([v[0], v[1] + h])? - self.eval_mu([v[0], v[1] - h])?) / (2.0 * h);
                [dx, dy]
            }
        })
    }

    /// `μ̂(η)` (real for every supported kind, all of which are even in v).
    pub fn mu_hat(&self, eta: Vec2) -> Result<f64> {
        Ok(match &self.kind {
            ProfileKind::Maxwellian { width } => (-0.5 * width * width * (eta[0] * eta[0] + eta[1] * eta[1])).exp(),
            ProfileKind::TwoBump { offset, width } => {
                (-0.5 * width * width * (eta[0] * eta[0] + eta[1] * eta[1])).exp()
                    * (offset[0] * eta[0] + offset[1] * eta[1]).cos()
            }
            ProfileKind::Tabulated(table) => hankel_transform(table, norm2(eta), self.v_max)?,
        })
    }

    /// `(∇_v μ)^(η) = iη μ̂(η)`.
    pub fn fourier_grad_mu(&self, eta: Vec2) -> Result<[Complex64; 2]> {
        let m = self.mu_hat(eta)?;
        Ok([Complex64::new(0.0, eta[0] * m), Complex64::new(0.0, eta[1] * m)])
    }

    /// Radius `s_cut` along direction `dir` past which `s|μ̂(s dir)| < 1e-12`.
    fn envelope_cut(&self, dir: Vec2) -> Result<f64> {
        match &self.kind {
            ProfileKind::Maxwellian { width } | ProfileKind::TwoBump { width, .. } => {
                let mut s = 1.0 / width;
                while s * (-0.5 * width * width * s * s).exp() >= 1e-12 {
                    s += 0.25 / width;
                }
                Ok(s)
            }
            ProfileKind::Tabulated(_) => {
                let mut s = 0.25;
                let mut below = 0;
                while s < 200.0 {
                    if s * self.mu_hat([s * dir[0], s * dir[1]])?.abs() < 1e-12 {
                        below += 1;
                        if below >= 4 {
                            return Ok(s);
                        }
                    } else {
                        below = 0;
                    }
                    s += 0.25;
                }
                Ok(200.0)
            }
        }
    }

    fn width_scale(&self) -> f64 {
        match &self.kind {
            ProfileKind::Maxwellian { width } | ProfileKind::TwoBump { width, .. } => *width,
            ProfileKind::Tabulated(_) => 1.0,
        }
    }
}

fn gaussian(v: Vec2, width: f64) -> f64 {
    let s2 = width * width;
    (-(v[0] * v[0] + v[1] * v[1]) / (2.0 * s2)).exp() / (2.0 * PI * s2)
}

const GL5_X: [f64; 5] = [-0.906_179_845_938_664, -0.538_469_310_105_683, 0.0, 0.538_469_310_105_683, 0.906_179_845_938_664];
const GL5_W: [f64; 5] = [0.236_926_885_056_189, 0.478_628_670_499_366, 0.568_888_888_888_889, 0.478_628_670_499_366, 0.236_926_885_056_189];

/// `2π∫ m(r) r dr` over `[0, v_max]` by Gauss–Legendre on the knot intervals.
fn radial_mass(table: &RadialTable, v_max: f64) -> Result<f64> {
    hankel_like(table, v_max, |_| 1.0, 2).map(|(v, _)| v)
}

fn hankel_like<F: Fn(f64) -> f64>(table: &RadialTable, v_max: f64, weight: F, split: usize) -> Result<(f64, f64)> {
    let mut breaks: Vec<f64> = table.knots.iter().copied().filter(|&r| r < v_max).collect();
    let mut r = table.last_knot();
    while r < v_max {
        r = (r + 0.1).min(v_max);
        breaks.push(r);
    }
    if *breaks.last().unwrap() < v_max {
        breaks.push(v_max);
    }
    let mut coarse = 0.0;
    let mut fine = 0.0;
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        for (levels, acc) in [(1usize, &mut coarse), (split, &mut fine)] {
            let h = (b - a) / levels as f64;
            for l in 0..levels {
                let lo = a + l as f64 * h;
                for k in 0..5 {
                    let r = lo + 0.5 * h * (GL5_X[k] + 1.0);
                    *acc += 0.5 * h * GL5_W[k] * table.eval(r)? * weight(r) * r;
                }
            }
        }
    }
    Ok((2.0 * PI * fine, 2.0 * PI * (fine - coarse).abs()))
}

/// `μ̂(k) = 2π ∫ m(r) J0(kr) r dr` with a refinement check.
fn hankel_transform(table: &RadialTable, k: f64, v_max: f64) -> Result<f64> {
    let (value, diff) = hankel_like(table, v_max, |r| bessel_j0(k * r), 2)?;
    if diff > 1e-8 {
        return Err(Error::QuadratureFailure(format!("Hankel transform at k = {k}: refinements differ by {diff:.2e}")));
    }
    Ok(value)
}

/// `K̃(τ,ξ) = ∫_0^∞ e^{-iτt} K(t,ξ) dt`, computed in the scaled variable
/// `s = t|ξ|` as `-(1+|ξ|²)^{-1} ∫_0^∞ e^{-iωs} s μ̂(s ξ/|ξ|) ds`, `ω = τ/|ξ|`.
/// Gauss–Kronrod for slow phases, Filon when `ω·s_cut > 50`.
pub fn kernel_hat_k(profile: &EquilibriumProfile, tau: f64, xi: Vec2) -> Result<Complex64> {
    let k = norm2(xi);
    if k == 0.0 {
        return Err(Error::ZeroWavenumber);
    }
    let dir = [xi[0] / k, xi[1] / k];
    let cut = profile.envelope_cut(dir)?;
    let omega = tau / k;
    let prefactor = -1.0 / (1.0 + k * k);
    let integral = if (omega * cut).abs() > 50.0 {
        let panels = ((cut / profile.width_scale()) * 60.0).ceil() as usize;
        let g = |s: f64| s * profile.mu_hat([s * dir[0], s * dir[1]]).unwrap_or(f64::NAN);
        let v = filon(g, 0.0, cut, omega, panels.max(200));
        if !v.re.is_finite() || !v.im.is_finite() {
            // surface the underlying error
            profile.mu_hat([cut * dir[0], cut * dir[1]])?;
            return Err(Error::QuadratureFailure("non-finite Filon sum".into()));
        }
        v
    } else {
        let first_err = std::cell::RefCell::new(None);
        let v = gauss_kronrod(
            |s| match profile.mu_hat([s * dir[0], s * dir[1]]) {
                Ok(m) => Complex64::from_polar(s * m, -omega * s),
                Err(e) => {
                    first_err.borrow_mut().get_or_insert(e);
                    Complex64::new(0.0, 0.0)
                }
            },
            0.0,
            cut,
            1e-14,
            1e-12,
        )?;
        if let Some(e) = first_err.into_inner() {
            return Err(e);
        }
        v
    };
    Ok(integral * prefactor)
}

/// Scan grid for the Penrose margin.
#[derive(Debug, Clone)]
pub struct PenroseScanConfig {
    pub tau_max: f64,
    pub n_tau: usize,
    pub xi_min: f64,
    pub xi_max: f64,
    pub n_xi: usize,
    /// Directions of ξ; radial profiles only need one.
    pub n_directions: usize,
    pub refine_tol: f64,
    pub max_refinements: usize,
    /// Margins below this are reported as a violation.
    pub violation_tol: f64,
}

impl Default for PenroseScanConfig {
    fn default() -> Self {
        PenroseScanConfig {
            tau_max: 40.0,
            n_tau: 81,
            xi_min: 1.0 / 64.0,
            xi_max: 16.0,
            n_xi: 41,
            n_directions: 1,
            refine_tol: 1e-3,
            max_refinements: 3,
            violation_tol: 1e-2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanSample {
    pub tau: f64,
    pub xi: Vec2,
    pub k_hat: Complex64,
}

impl ScanSample {
    pub fn xi_mag(&self) -> f64 {
        norm2(self.xi)
    }
    pub fn abs_one_minus_k(&self) -> f64 {
        (Complex64::new(1.0, 0.0) - self.k_hat).norm()
    }
}

/// Result of a Penrose scan.
#[derive(Debug, Clone)]
pub struct PenroseScan {
    pub tau_range: (f64, f64),
    pub xi_magnitudes: Vec<f64>,
    pub margin: f64,
    /// `(τ*, |ξ|*)`.
    pub argmin: (f64, f64),
    /// Margins after each refinement level.
    pub history: Vec<f64>,
    /// Samples of the finest level.
    pub samples: Vec<ScanSample>,
}

impl PenroseScan {
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# landau-lab v1")?;
        writeln!(w, "tau,xi_mag,re_K,im_K,abs_one_minus_K")?;
        for s in &self.samples {
            writeln!(w, "{:.10e},{:.10e},{:.10e},{:.10e},{:.10e}", s.tau, s.xi_mag(), s.k_hat.re, s.k_hat.im, s.abs_one_minus_k())?;
        }
        Ok(())
    }
}

fn scan_level(profile: &EquilibriumProfile, cfg: &PenroseScanConfig, n_tau: usize, n_xi: usize) -> Result<Vec<ScanSample>> {
    let taus: Vec<f64> = if n_tau == 1 {
        vec![cfg.tau_max]
    } else {
        (0..n_tau).map(|i| cfg.tau_max * i as f64 / (n_tau - 1) as f64).collect()
    };
    let mags: Vec<f64> = if n_xi == 1 {
        vec![cfg.xi_min]
    } else {
        let (lo, hi) = (cfg.xi_min.ln(), cfg.xi_max.ln());
        (0..n_xi).map(|j| (lo + (hi - lo) * j as f64 / (n_xi - 1) as f64).exp()).collect()
    };
    let n_dir = if profile.is_radial() { 1 } else { cfg.n_directions.max(1) };
    let mut points = Vec::with_capacity(taus.len() * mags.len() * n_dir);
    for d in 0..n_dir {
        // directions over a half circle; K̃(τ,-ξ) = conj K̃(-τ,ξ) covers the rest
        let angle = PI * d as f64 / n_dir as f64;
        for &k in &mags {
            for &tau in &taus {
                points.push((tau, [k * angle.cos(), k * angle.sin()]));
            }
        }
    }
    points
        .par_iter()
        .map(|&(tau, xi)| kernel_hat_k(profile, tau, xi).map(|k_hat| ScanSample { tau, xi, k_hat }))
        .collect()
}

fn min_sample(samples: &[ScanSample]) -> ScanSample {
    *samples
        .iter()
        .min_by(|a, b| a.abs_one_minus_k().partial_cmp(&b.abs_one_minus_k()).unwrap())
        .expect("nonempty scan")
}

/// Minimum of `|1 - K̃(τ,ξ)|` over the scan grid, refined by doubling until
/// the margin moves by less than `refine_tol`. Only `τ ≥ 0` is sampled since
/// `K̃(-τ,ξ) = conj K̃(τ,ξ)` for real `μ`.
pub fn penrose_margin(profile: &EquilibriumProfile, cfg: &PenroseScanConfig) -> Result<PenroseScan> {
    if cfg.n_tau == 0 || cfg.n_xi == 0 {
        return Err(Error::InvalidArgument("empty Penrose scan grid".into()));
    }
    let degenerate = cfg.n_tau == 1 && cfg.n_xi == 1;
    let (mut n_tau, mut n_xi) = (cfg.n_tau, cfg.n_xi);
    let mut samples = scan_level(profile, cfg, n_tau, n_xi)?;
    let mut best = min_sample(&samples);
    let mut history = vec![best.abs_one_minus_k()];
    if !degenerate {
        for _ in 0..cfg.max_refinements {
            n_tau = 2 * n_tau - 1;
            n_xi = 2 * n_xi - 1;
            samples = scan_level(profile, cfg, n_tau, n_xi)?;
            best = min_sample(&samples);
            let margin = best.abs_one_minus_k();
            let drift = (margin - history.last().unwrap()).abs();
            history.push(margin);
            if drift < cfg.refine_tol {
                break;
            }
        }
    }
    let margin = best.abs_one_minus_k();
    let argmin = (best.tau, best.xi_mag());
    if margin <= cfg.violation_tol {
        return Err(Error::PenroseViolation { margin, tau: argmin.0, xi: argmin.1 });
    }
    let mut xi_magnitudes: Vec<f64> = samples.iter().map(|s| s.xi_mag()).collect();
    xi_magnitudes.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    xi_magnitudes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xi_magnitudes.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    Ok(PenroseScan { tau_range: (-cfg.tau_max, cfg.tau_max), xi_magnitudes, margin, argmin, history, samples })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn maxwellian_table(h: f64, r_max: f64) -> RadialTable {
        let n = (r_max / h).round() as usize;
        let knots: Vec<f64> = (0..=n).map(|i| i as f64 * h).collect();
        let values = knots.iter().map(|r| (-0.5 * r * r).exp() / (2.0 * PI)).collect();
        RadialTable::new(knots, values, true).unwrap()
    }

    #[test]
    fn maxwellian_point_values() {
        let m = EquilibriumProfile::maxwellian();
        assert!((m.eval_mu([0.0, 0.0]).unwrap() - 0.159_154_943_091_895_35).abs() < 1e-15);
        let v = m.eval_mu([1.0, 1.0]).unwrap();
        assert!((v - (-1.0f64).exp() / (2.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn fourier_grad_mu_closed_form() {
        let m = EquilibriumProfile::maxwellian();
        let g = m.fourier_grad_mu([1.0, 0.0]).unwrap();
        assert!((g[0] - Complex64::new(0.0, (-0.5f64).exp())).norm() < 1e-15);
        assert_eq!(g[1], Complex64::new(0.0, 0.0));
        let z = m.fourier_grad_mu([0.0, 0.0]).unwrap();
        assert_eq!(z[0].norm() + z[1].norm(), 0.0);
    }

    #[test]
    fn tabulated_maxwellian_matches_analytic() {
        let table = maxwellian_table(0.05, 9.0);
        let tab = EquilibriumProfile::tabulated(table, 9.0, 8).unwrap();
        let an = EquilibriumProfile::maxwellian();
        for &eta in &[[0.0, 0.0], [1.0, 0.0], [0.3, -1.1], [2.5, 1.5], [4.0, 0.0]] {
            let a = an.fourier_grad_mu(eta).unwrap();
            let t = tab.fourier_grad_mu(eta).unwrap();
            assert!((a[0] - t[0]).norm() < 1e-6 && (a[1] - t[1]).norm() < 1e-6, "eta {eta:?}");
        }
        for &r in &[0.0, 0.37, 1.0, 3.3] {
            assert!((tab.eval_mu([r, 0.0]).unwrap() - an.eval_mu([r, 0.0]).unwrap()).abs() < 1e-8);
        }
    }

    #[test]
    fn tabulated_without_tail_rejects_far_queries() {
        let knots: Vec<f64> = (0..=180).map(|i| i as f64 * 0.05).collect();
        let values = knots.iter().map(|r| (-0.5 * r * r).exp() / (2.0 * PI)).collect();
        let table = RadialTable::new(knots, values, false).unwrap();
        let prof = EquilibriumProfile::tabulated(table, 9.0, 8).unwrap();
        assert!(matches!(prof.eval_mu([9.5, 0.0]), Err(Error::ProfileOutOfRange { .. })));
    }

    #[test]
    fn unnormalized_table_rejected() {
        let knots: Vec<f64> = (0..=180).map(|i| i as f64 * 0.05).collect();
        let values = knots.iter().map(|r| 2.0 * (-0.5 * r * r).exp() / (2.0 * PI)).collect();
        let table = RadialTable::new(knots, values, true).unwrap();
        assert!(matches!(EquilibriumProfile::tabulated(table, 9.0, 8), Err(Error::InvalidProfile(_))));
    }

    #[test]
    fn kernel_hat_at_zero_frequency() {
        let m = EquilibriumProfile::maxwellian();
        for &k in &[0.1, 1.0, 3.0] {
            let v = kernel_hat_k(&m, 0.0, [k, 0.0]).unwrap();
            assert!((v.re + 1.0 / (1.0 + k * k)).abs() < 1e-10, "k {k}: {v}");
            assert!(v.im.abs() < 1e-12);
        }
        assert_eq!(kernel_hat_k(&m, 1.0, [0.0, 0.0]), Err(Error::ZeroWavenumber));
    }

    #[test]
    fn kernel_hat_reference_values() {
        // Frozen from the closed form
        //   K̃ = -(1+k²)^{-1} [1 - iω(√(π/2) e^{-ω²/2} - i√2 F(ω/√2))], ω = τ/k,
        // with F the Dawson function (scipy.special.dawsn).
        let cases = [
            (1.0, 1.0, -0.137_610_770_496_461_75, 0.380_086_725_266_570_17),
            (0.5, 0.25, 0.263_506_963_887_828_85, 0.319_280_232_956_318_35),
            (3.0, 2.0, 0.025_640_863_005_994_153, 0.122_067_458_116_373_61),
            (40.0, 0.5, 0.000_125_058_639_576_636_22, 0.0),
        ];
        let m = EquilibriumProfile::maxwellian();
        for &(tau, k, re, im) in &cases {
            let v = kernel_hat_k(&m, tau, [k, 0.0]).unwrap();
            assert!((v.re - re).abs() < 1e-9, "tau {tau} k {k}: {v} vs {re}");
            assert!((v.im - im).abs() < 1e-9, "tau {tau} k {k}: {v} vs {im}");
        }
    }

    #[test]
    fn kernel_hat_symmetries() {
        let m = EquilibriumProfile::maxwellian();
        for &(tau, k) in &[(0.7, 0.4), (3.0, 1.3), (25.0, 0.05)] {
            let base = kernel_hat_k(&m, tau, [k, 0.0]).unwrap();
            let neg = kernel_hat_k(&m, -tau, [k, 0.0]).unwrap();
            assert!((neg - base.conj()).norm() < 1e-10);
            for a in 0..8 {
                let th = a as f64 * PI / 4.0 + 0.1;
                let rot = kernel_hat_k(&m, tau, [k * th.cos(), k * th.sin()]).unwrap();
                assert!((rot - base).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn kernel_hat_decays_in_xi() {
        let m = EquilibriumProfile::maxwellian();
        let mut last = f64::INFINITY;
        for &k in &[1.0, 2.0, 4.0, 8.0, 16.0] {
            let mut worst: f64 = 0.0;
            for i in 0..21 {
                let v = kernel_hat_k(&m, 2.0 * i as f64, [k, 0.0]).unwrap();
                // envelope: (1+k²)^{-1} ∫ s e^{-s²/2} ds = (1+k²)^{-1}
                assert!(v.norm() <= 1.0 / (1.0 + k * k) + 1e-12);
                worst = worst.max(v.norm());
            }
            assert!(worst < last);
            last = worst;
        }
    }

    #[test]
    fn single_point_scan() {
        let m = EquilibriumProfile::maxwellian();
        let cfg = PenroseScanConfig { tau_max: 1.5, n_tau: 1, xi_min: 0.7, n_xi: 1, ..Default::default() };
        let scan = penrose_margin(&m, &cfg).unwrap();
        let direct = (Complex64::new(1.0, 0.0) - kernel_hat_k(&m, 1.5, [0.7, 0.0]).unwrap()).norm();
        assert_eq!(scan.margin, direct);
        assert_eq!(scan.samples.len(), 1);
    }
}
