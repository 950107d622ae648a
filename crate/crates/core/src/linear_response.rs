//! Time-domain kernel `K(t, ξ)`, its Volterra resolvent `G = K + K∗G`, and
//! the space-time convolutions they define.

use std::collections::HashMap;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::equilibria::{EquilibriumProfile, Vec2};
use crate::error::{Error, Result};
use crate::spacetime::{DensityTrajectory, SpaceTimeField, TimeGrid};
use crate::spectral_field::PeriodicGrid;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
/// Kernel samples below this fraction of the peak are dropped from convolution windows.
const WINDOW_CUTOFF: f64 = 1e-15;
const INSTABILITY_BOUND: f64 = 1e6;

/// `K(t_m, ξ) = (1+|ξ|²)^{-1} iξ·(∇_vμ)^(t_m ξ)` at every node.
pub fn kernel_time_k(profile: &EquilibriumProfile, xi: Vec2, times: &TimeGrid) -> Result<Vec<Complex64>> {
    let k2 = xi[0] * xi[0] + xi[1] * xi[1];
    if k2 == 0.0 {
        return Err(Error::ZeroWavenumber);
    }
    times
        .nodes()
        .map(|t| {
            let g = profile.fourier_grad_mu([t * xi[0], t * xi[1]])?;
            let dot = Complex64::new(0.0, xi[0]) * g[0] + Complex64::new(0.0, xi[1]) * g[1];
            Ok(dot / (1.0 + k2))
        })
        .collect()
}

/// Number of leading samples that matter: one past the last sample above
/// the cutoff.
fn window(samples: &[Complex64]) -> usize {
    let peak = samples.iter().fold(0.0f64, |m, c| m.max(c.norm()));
    if peak == 0.0 {
        return 0;
    }
    let thr = peak * WINDOW_CUTOFF;
    samples.iter().rposition(|c| c.norm() > thr).map_or(0, |i| i + 1)
}

/// Solves `x = S + K∗x` with the product trapezoidal rule, marching in `t`.
pub fn volterra_solve(kernel: &[Complex64], source: &[Complex64], dt: f64) -> Result<Vec<Complex64>> {
    let n = source.len();
    if kernel.len() < n {
        return Err(Error::GridMismatch(format!("{} kernel samples for {} nodes", kernel.len(), n)));
    }
    let w = window(&kernel[..n]);
    let scale = source.iter().fold(0.0f64, |m, c| m.max(c.norm())).max(kernel.iter().fold(0.0f64, |m, c| m.max(c.norm())));
    let bound = INSTABILITY_BOUND * scale.max(f64::MIN_POSITIVE);
    let denom = Complex64::new(1.0, 0.0) - 0.5 * dt * kernel[0];
    let mut x = vec![ZERO; n];
    if n == 0 {
        return Ok(x);
    }
    x[0] = source[0];
    for m in 1..n {
        let mut acc = ZERO;
        if m < w {
            acc += 0.5 * kernel[m] * x[0];
        }
        let lo = if m >= w { m + 1 - w } else { 1 };
        for j in lo.max(1)..m {
            acc += kernel[m - j] * x[j];
        }
        x[m] = (source[m] + dt * acc) / denom;
        if !(x[m].norm() <= bound) {
            return Err(Error::ResolventInstability { step: m, magnitude: x[m].norm() });
        }
    }
    Ok(x)
}

/// `G = K + K∗G`.
pub fn volterra_resolvent(kernel: &[Complex64], times: &TimeGrid) -> Result<Vec<Complex64>> {
    volterra_solve(kernel, kernel, times.dt())
}

/// Trapezoidal `(a∗b)(t_m) = ∫_0^{t_m} a(t_m - s) b(s) ds` at every node.
pub fn trapezoid_convolution(a: &[Complex64], b: &[Complex64], dt: f64) -> Vec<Complex64> {
    let n = b.len();
    let w = window(&a[..n.min(a.len())]);
    (0..n)
        .map(|m| {
            if m == 0 {
                return ZERO;
            }
            let mut acc = ZERO;
            let lo = if m >= w { m + 1 - w } else { 0 };
            for j in lo..=m {
                let wt = if j == 0 || j == m { 0.5 } else { 1.0 };
                acc += wt * a[m - j] * b[j];
            }
            acc * dt
        })
        .collect()
}

/// Kernel and resolvent samples for one wavenumber.
#[derive(Debug, Clone)]
pub struct ModeResolvent {
    pub xi: Vec2,
    pub k_samples: Vec<Complex64>,
    pub g_samples: Vec<Complex64>,
}

impl ModeResolvent {
    pub fn build(profile: &EquilibriumProfile, xi: Vec2, times: &TimeGrid) -> Result<Self> {
        let k = kernel_time_k(profile, xi, times)?;
        let g = volterra_resolvent(&k, times)?;
        Ok(ModeResolvent { xi, k_samples: k, g_samples: g })
    }

    /// `max_m |G(t_m) - K(t_m) - (K∗G)(t_m)|`.
    pub fn identity_residual(&self, dt: f64) -> f64 {
        let conv = trapezoid_convolution(&self.k_samples, &self.g_samples, dt);
        self.g_samples
            .iter()
            .zip(&self.k_samples)
            .zip(&conv)
            .fold(0.0, |m, ((g, k), c)| m.max((g - k - c).norm()))
    }

    /// Trapezoidal Laplace transform `Σ w_m G(t_m) e^{-iτ t_m} dt`.
    pub fn laplace_g(&self, tau: f64, dt: f64) -> Complex64 {
        let n = self.g_samples.len();
        self.g_samples
            .iter()
            .enumerate()
            .map(|(m, g)| {
                let wt = if m == 0 || m + 1 == n { 0.5 } else { 1.0 };
                wt * g * Complex64::from_polar(1.0, -tau * m as f64 * dt)
            })
            .sum::<Complex64>()
            * dt
    }

    pub fn write_csv<W: Write>(&self, times: &TimeGrid, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# landau-lab v1")?;
        writeln!(w, "t,re_K,im_K,re_G,im_G")?;
        for (m, t) in times.nodes().enumerate() {
            let (k, g) = (self.k_samples[m], self.g_samples[m]);
            writeln!(w, "{t},{},{},{},{}", k.re, k.im, g.re, g.im)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct BankConfig {
    /// Modes above this magnitude use `G ≈ K`.
    pub xi_max: Option<f64>,
}

/// Resolvents for every mode of a periodic grid, shared between modes that
/// the equilibrium cannot distinguish (same `|ξ|` for radial `μ`, `±ξ` otherwise).
#[derive(Debug, Clone)]
pub struct ResolventBank {
    pub grid: PeriodicGrid,
    pub times: TimeGrid,
    mode_slot: Vec<Option<usize>>,
    pub resolvents: Vec<ModeResolvent>,
}

fn mode_key(grid: &PeriodicGrid, idx: usize, radial: bool) -> (i64, i64) {
    let (a, b) = (grid.wavenumber(idx / grid.n), grid.wavenumber(idx % grid.n));
    if radial {
        (a * a + b * b, 0)
    } else if (a, b) < (0, 0) {
        (-a, -b)
    } else {
        (a, b)
    }
}

impl ResolventBank {
    pub fn build(profile: &EquilibriumProfile, grid: PeriodicGrid, times: TimeGrid, cfg: BankConfig) -> Result<Self> {
        let radial = profile.is_radial();
        let mut slots: HashMap<(i64, i64), usize> = HashMap::new();
        let mut reps: Vec<usize> = Vec::new();
        let mut mode_slot = vec![None; grid.len()];
        for (idx, slot) in mode_slot.iter_mut().enumerate().skip(1) {
            let key = mode_key(&grid, idx, radial);
            let next = reps.len();
            let s = *slots.entry(key).or_insert_with(|| {
                reps.push(idx);
                next
            });
            *slot = Some(s);
        }
        let resolvents = reps
            .par_iter()
            .map(|&idx| {
                let xi = grid.xi(idx);
                let k = kernel_time_k(profile, xi, &times)?;
                let g = match cfg.xi_max {
                    Some(cut) if xi[0].hypot(xi[1]) > cut => k.clone(),
                    _ => volterra_resolvent(&k, &times)?,
                };
                Ok(ModeResolvent { xi, k_samples: k, g_samples: g })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ResolventBank { grid, times, mode_slot, resolvents })
    }

    /// Resolvent of FFT bin `idx`; `None` for the zero mode, where `K = G = 0`.
    pub fn for_mode(&self, idx: usize) -> Option<&ModeResolvent> {
        self.mode_slot[idx].map(|s| &self.resolvents[s])
    }

    pub fn max_identity_residual(&self) -> f64 {
        let dt = self.times.dt();
        self.resolvents.par_iter().map(|r| r.identity_residual(dt)).reduce(|| 0.0, f64::max)
    }

    fn check(&self, g: &SpaceTimeField) -> Result<()> {
        self.grid.check_same(&g.grid)?;
        if (g.times.dt() - self.times.dt()).abs() > 1e-12 * self.times.dt() || g.times.len() > self.times.len() {
            return Err(Error::GridMismatch(format!("time grid {:?} vs resolvent grid {:?}", g.times, self.times)));
        }
        Ok(())
    }

    fn convolve(&self, g: &SpaceTimeField, pick: impl Fn(&ModeResolvent) -> &[Complex64] + Sync) -> Result<SpaceTimeField> {
        self.check(g)?;
        let spectra = g.spectra();
        let nt = g.times.len();
        let dt = g.times.dt();
        let per_mode: Vec<Vec<Complex64>> = (0..self.grid.len())
            .into_par_iter()
            .map(|idx| match self.for_mode(idx) {
                None => vec![ZERO; nt],
                Some(r) => {
                    let series: Vec<Complex64> = spectra.iter().map(|s| s[idx]).collect();
                    trapezoid_convolution(&pick(r)[..nt], &series, dt)
                }
            })
            .collect();
        let out: Vec<Vec<Complex64>> = (0..nt).map(|m| per_mode.iter().map(|s| s[m]).collect()).collect();
        Ok(SpaceTimeField::from_spectra(self.grid, g.times, out))
    }

    /// `G ∗_{(t,x)} g`.
    pub fn apply_g(&self, g: &SpaceTimeField) -> Result<SpaceTimeField> {
        self.convolve(g, |r| &r.g_samples)
    }

    /// `K ∗_{(t,x)} g`.
    pub fn apply_k(&self, g: &SpaceTimeField) -> Result<SpaceTimeField> {
        self.convolve(g, |r| &r.k_samples)
    }
}

/// `G ∗_{(t,x)} g` with the resolvents of `bank`.
pub fn apply_g_spacetime(g: &SpaceTimeField, bank: &ResolventBank) -> Result<SpaceTimeField> {
    bank.apply_g(g)
}

#[derive(Debug, Clone, Copy)]
pub struct LinearEvolveConfig {
    /// Keep every `output_stride`-th node in the returned trajectory.
    pub output_stride: usize,
}

impl Default for LinearEvolveConfig {
    fn default() -> Self {
        LinearEvolveConfig { output_stride: 1 }
    }
}

/// Solves `ρ̂ = Ŝ + K∗ρ̂` mode by mode, with `Ŝ(ξ, t)` the continuous
/// transform of the free-transport source. `profile = None` forces `K = 0`.
pub fn linear_density_evolve<S>(
    profile: Option<&EquilibriumProfile>,
    source: S,
    grid: PeriodicGrid,
    times: TimeGrid,
    cfg: LinearEvolveConfig,
) -> Result<DensityTrajectory>
where
    S: Fn(Vec2, f64) -> Complex64 + Sync,
{
    let stride = cfg.output_stride.max(1);
    if times.steps % stride != 0 {
        return Err(Error::InvalidArgument(format!("output stride {stride} does not divide {} steps", times.steps)));
    }
    let out_times = TimeGrid::with_start(times.start, times.horizon, times.steps / stride)?;
    let radial = profile.map_or(true, |p| p.is_radial());
    // kernels per equivalence class, computed lazily in parallel
    let mut slots: HashMap<(i64, i64), usize> = HashMap::new();
    let mut reps = Vec::new();
    let mut mode_slot = vec![usize::MAX; grid.len()];
    for (idx, slot) in mode_slot.iter_mut().enumerate().skip(1) {
        let key = mode_key(&grid, idx, radial);
        let next = reps.len();
        *slot = *slots.entry(key).or_insert_with(|| {
            reps.push(idx);
            next
        });
    }
    let kernels: Vec<Vec<Complex64>> = match profile {
        Some(p) => reps.par_iter().map(|&idx| kernel_time_k(p, grid.xi(idx), &times)).collect::<Result<_>>()?,
        None => Vec::new(),
    };
    let dt = times.dt();
    let per_mode: Vec<Vec<Complex64>> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let xi = grid.xi(idx);
            let src: Vec<Complex64> = times.nodes().map(|t| grid.dft_from_continuous(idx, source(xi, t))).collect();
            let rho = if idx == 0 || kernels.is_empty() { src } else { volterra_solve(&kernels[mode_slot[idx]], &src, dt)? };
            Ok(rho.into_iter().step_by(stride).collect())
        })
        .collect::<Result<_>>()?;
    let spectra: Vec<Vec<Complex64>> = (0..out_times.len()).map(|m| per_mode.iter().map(|s| s[m]).collect()).collect();
    Ok(DensityTrajectory::new(SpaceTimeField::from_spectra(grid, out_times, spectra)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::kernel_hat_k;

    #[test]
    fn maxwellian_kernel_closed_form() {
        let p = EquilibriumProfile::maxwellian();
        let times = TimeGrid::new(10.0, 100).unwrap();
        let xi = [0.6, -0.8];
        let k = kernel_time_k(&p, xi, &times).unwrap();
        assert_eq!(k[0], ZERO);
        for (m, t) in times.nodes().enumerate() {
            let exact = -(1.0 / 2.0) * t * (-t * t / 2.0).exp();
            assert!((k[m].re - exact).abs() < 1e-15 && k[m].im == 0.0);
        }
        assert!(matches!(kernel_time_k(&p, [0.0, 0.0], &times), Err(Error::ZeroWavenumber)));
        let big = kernel_time_k(&p, [50.0, 0.0], &times).unwrap();
        assert!(big.iter().all(|c| c.norm() < 0.05));
    }

    #[test]
    fn zero_kernel_gives_zero_resolvent() {
        let times = TimeGrid::new(1.0, 10).unwrap();
        let g = volterra_resolvent(&vec![ZERO; 11], &times).unwrap();
        assert!(g.iter().all(|c| *c == ZERO));
    }

    #[test]
    fn constant_kernel_is_exponential() {
        let c = 0.5;
        let times = TimeGrid::new(2.0, 2000).unwrap();
        let k = vec![Complex64::new(c, 0.0); times.len()];
        let g = volterra_resolvent(&k, &times).unwrap();
        for (m, t) in times.nodes().enumerate() {
            let exact = c * (c * t).exp();
            assert!((g[m].re - exact).abs() < 1e-6 * exact);
        }
    }

    #[test]
    fn growing_kernel_is_flagged() {
        let times = TimeGrid::new(40.0, 400).unwrap();
        let k = vec![Complex64::new(1.0, 0.0); times.len()];
        assert!(matches!(volterra_resolvent(&k, &times), Err(Error::ResolventInstability { .. })));
    }

    #[test]
    fn maxwellian_resolvent_identity_and_laplace() {
        let p = EquilibriumProfile::maxwellian();
        let times = TimeGrid::new(60.0, 6000).unwrap();
        let r = ModeResolvent::build(&p, [0.5, 0.0], &times).unwrap();
        assert!(r.identity_residual(times.dt()) < 1e-8);
        for tau in [0.0, 0.3, 1.0] {
            let kt = kernel_hat_k(&p, tau, [0.5, 0.0]).unwrap();
            let expect = kt / (1.0 - kt);
            assert!((r.laplace_g(tau, times.dt()) - expect).norm() < 1e-4, "tau {tau}");
        }
    }

    #[test]
    fn bank_groups_radial_modes_and_is_real() {
        let p = EquilibriumProfile::maxwellian();
        let grid = PeriodicGrid::new(8.0, 16).unwrap();
        let times = TimeGrid::new(4.0, 40).unwrap();
        let bank = ResolventBank::build(&p, grid, times, BankConfig::default()).unwrap();
        assert!(bank.resolvents.len() < grid.len() / 3);
        assert!(bank.for_mode(0).is_none());
        assert!(bank.max_identity_residual() < 1e-8);
        let g = SpaceTimeField::from_fn(grid, times, |t, x| (-(x[0] * x[0] + x[1] * x[1]) / 2.0 - t).exp() * (1.0 + x[0]));
        let out = bank.apply_g(&g).unwrap();
        for s in &out.slices {
            let mut d = s.spectrum().to_vec();
            s.grid.fft().inverse(&mut d);
            assert!(d.iter().all(|c| c.im.abs() < 1e-10));
        }
        assert!(bank.apply_g(&SpaceTimeField::zeros(grid, times)).unwrap().sup_norm() == 0.0);
    }

    #[test]
    fn apply_g_single_mode_matches_direct_sum() {
        let p = EquilibriumProfile::maxwellian();
        let grid = PeriodicGrid::new(std::f64::consts::PI, 8).unwrap();
        let times = TimeGrid::new(3.0, 30).unwrap();
        let bank = ResolventBank::build(&p, grid, times, BankConfig::default()).unwrap();
        // g(t, x) = cos(x1) on the first two nodes only
        let g = SpaceTimeField::from_fn(grid, times, |t, x| if t < 0.15 { x[0].cos() } else { 0.0 });
        let out = bank.apply_g(&g).unwrap();
        let r = bank.for_mode(8).unwrap();
        let dt = times.dt();
        for m in 2..times.len() {
            // trapezoid over s ∈ {0, dt}: ½G(t_m)·1 + G(t_m - dt)·1
            let direct = dt * (0.5 * r.g_samples[m] + r.g_samples[m - 1]).re;
            let x = grid.point(0);
            assert!((out.slices[m].values[0] - direct * x[0].cos()).abs() < 1e-13);
        }
    }

    #[test]
    fn causality() {
        let p = EquilibriumProfile::maxwellian();
        let grid = PeriodicGrid::new(4.0, 8).unwrap();
        let times = TimeGrid::new(2.0, 20).unwrap();
        let bank = ResolventBank::build(&p, grid, times, BankConfig::default()).unwrap();
        let g = SpaceTimeField::from_fn(grid, times, |t, x| (t * x[1]).sin() * (-x[0] * x[0]).exp());
        let full = bank.apply_g(&g).unwrap();
        let short = bank.apply_g(&g.truncated(10).unwrap()).unwrap();
        for m in 0..=10 {
            assert_eq!(full.slices[m].values, short.slices[m].values);
        }
    }

    #[test]
    fn free_transport_gaussian() {
        let eps = 1e-3;
        let grid = PeriodicGrid::new(24.0, 128).unwrap();
        let times = TimeGrid::new(4.0, 8).unwrap();
        let src = |xi: Vec2, t: f64| {
            let k2 = xi[0] * xi[0] + xi[1] * xi[1];
            Complex64::new(eps * 2.0 * std::f64::consts::PI * (-k2 * (1.0 + t * t) / 2.0).exp(), 0.0)
        };
        let traj = linear_density_evolve(None, src, grid, times, LinearEvolveConfig { output_stride: 2 }).unwrap();
        assert_eq!(traj.rho.slices.len(), 5);
        for (m, t) in traj.times().nodes().enumerate() {
            let s = 1.0 + t * t;
            let exact = ScalarField2D::from_fn(grid, |x| eps * (-(x[0] * x[0] + x[1] * x[1]) / (2.0 * s)).exp() / s);
            assert!(traj.rho.slices[m].sub(&exact).sup_norm() < 1e-8 * eps);
        }
    }

    use crate::spectral_field::ScalarField2D;
}
